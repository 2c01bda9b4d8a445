use ontosearch::index::{Document, TfIdfIndex};
use ontosearch::kcore::{cooccurrence, kcores_to_tsv, mine_kcores, parse_kcores, score_kcore, MinerConfig, MinerError};
use ontosearch::text::StopwordList;
use ontosearch_testkit::{planted_corpus, PLANTED_TOPICS};
use proptest::prelude::*;

fn index(texts: &[String]) -> TfIdfIndex {
    let docs: Vec<Document> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document::new(i as u32, format!("d{i}"), t.as_str()))
        .collect();
    TfIdfIndex::build(&docs, &StopwordList::empty()).unwrap()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn cooccurrence_equals_pairwise_scan() {
    let texts = strings(&[
        "cancer lump breast",
        "cancer cell",
        "lump lump tumor",
        "breast cancer tumor",
        "cell biology",
        "tumor cancer cell",
        "breast",
        "biology organism cell",
        "lump breast cancer cell",
        "organism",
    ]);
    let idx = index(&texts);
    let m = cooccurrence(&idx, 50).unwrap();
    let bags: Vec<Vec<&str>> = texts.iter().map(|t| t.split(' ').collect()).collect();
    for (i, a) in m.terms().iter().enumerate() {
        for (j, b) in m.terms().iter().enumerate() {
            let want = bags.iter().filter(|d| d.contains(&a.as_str()) && d.contains(&b.as_str())).count();
            assert_eq!(m.codoc(i, j) as usize, want, "{a} {b}");
        }
        assert_eq!(m.codoc(i, i) as usize, idx.df(a));
    }
    assert_eq!(m.codoc_by_term("organism", "tumor"), Some(0));
}

#[test]
fn score_extremes() {
    let idx = index(&strings(&["aa bb cc dd", "aa bb cc dd", "ee ff gg hh"]));
    let m = cooccurrence(&idx, 10).unwrap();
    assert_eq!(score_kcore(&strings(&["aa", "ee"]), &m, 0.0).unwrap(), 0.0);
    let idx = index(&strings(&["aa bb cc", "aa bb cc"]));
    let m = cooccurrence(&idx, 10).unwrap();
    assert_eq!(score_kcore(&strings(&["aa", "bb", "cc"]), &m, 0.0).unwrap(), 1.0);
}

#[test]
fn small_vocabularies() {
    let idx = index(&strings(&["aa bb", "aa"]));
    let config = MinerConfig {
        k: 2,
        ..MinerConfig::default()
    };
    let cores = mine_kcores(&idx, &config).unwrap();
    assert_eq!(cores.len(), 1);
    assert_eq!(cores[0].terms, ["aa", "bb"]);
    assert!(matches!(
        mine_kcores(&idx, &MinerConfig::default()),
        Err(MinerError::VocabularyTooSmall { vocab: 2, needed: 4 })
    ));
}

#[test]
fn k_three_is_honored() {
    let config = MinerConfig {
        k: 3,
        ..MinerConfig::default()
    };
    let cores = mine_kcores(&index(&planted_corpus()), &config).unwrap();
    assert!(cores.iter().all(|c| c.terms.len() == 3));
    for c in &cores[..2] {
        assert!(PLANTED_TOPICS.iter().any(|t| c.terms.iter().all(|x| t.contains(&x.as_str()))));
    }
}

#[test]
fn tsv_round_trip() {
    let cores = mine_kcores(&index(&planted_corpus()), &MinerConfig::default()).unwrap();
    let tsv = kcores_to_tsv(&cores);
    assert!(tsv.starts_with("1\t"));
    assert_eq!(kcores_to_tsv(&parse_kcores(&tsv).unwrap()), tsv);
    assert!(parse_kcores("1\tx\tcancer,lump\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn document_order_does_not_matter(order in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        let texts = planted_corpus();
        let permuted: Vec<String> = order.iter().map(|&i| texts[i].clone()).collect();
        let config = MinerConfig { pool_size: 20, ..MinerConfig::default() };
        let a = mine_kcores(&index(&texts), &config).unwrap();
        let b = mine_kcores(&index(&permuted), &config).unwrap();
        prop_assert_eq!(kcores_to_tsv(&a), kcores_to_tsv(&b));
    }

    #[test]
    fn scores_stay_in_unit_interval(lambda in 0.0f64..=1.0, pick in prop::collection::btree_set(0usize..20, 4)) {
        let idx = index(&planted_corpus());
        let m = cooccurrence(&idx, 20).unwrap();
        let set: Vec<String> = pick.iter().map(|&i| m.terms()[i].clone()).collect();
        let s = score_kcore(&set, &m, lambda).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }
}
