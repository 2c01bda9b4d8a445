use ontosearch::ontology::{OntologyError, OntologyGraph};
use ontosearch::thesaurus::{LexicalRelation, Thesaurus};
use ontosearch_testkit::{fixture, read_fixture};
use proptest::prelude::*;

fn thesaurus() -> Thesaurus {
    Thesaurus::load(fixture("thesaurus.txt")).unwrap()
}

fn breast_cancer() -> OntologyGraph {
    OntologyGraph::load(fixture("ontology.txt")).unwrap()
}

#[test]
fn six_senses_of_cell() {
    let t = thesaurus();
    let cell = t.senses("cell");
    assert_eq!(cell.len(), 6);
    assert!(cell[0].gloss.contains("compartment"));
    assert!(cell[1].gloss.contains("basic structural and functional unit of all organisms"));
    assert!(cell[5].gloss.contains("monk or nun"));
    assert!(t.senses("nebula").is_empty());
    assert_eq!(t.senses("carcinoma").len(), 1);
    assert_eq!(t.senses("cell phone").len(), 0);
    assert_eq!(t.senses("cellular phone")[0].sense_id, "cell.n.05");
}

#[test]
fn hyponym_declarations_complete_hypernyms() {
    let t = thesaurus();
    assert_eq!(t.get("carcinoma.n.01").unwrap().hypernyms, ["cancer.n.01"]);
    assert_eq!(t.get("tumor.n.01").unwrap().hyponyms, ["cancer.n.01"]);
    let n = t.neighborhood("cancer.n.01", "cancer").unwrap();
    let leukemia = n.iter().find(|x| x.lemma == "leukemia").unwrap();
    assert_eq!((leukemia.weight, leukemia.relation), (0.5, LexicalRelation::Hyponym));
    let syn = n.iter().find(|x| x.lemma == "malignant neoplastic disease").unwrap();
    assert_eq!(syn.weight, 1.0);
    assert!(n.iter().all(|x| x.lemma != "cancer"));
    assert!(t.neighborhood("metastasis.n.01", "metastasis").unwrap().is_empty());
    assert!(t.neighborhood("nope.n.01", "nope").is_err());
}

#[test]
fn canonical_text_is_a_fixed_point() {
    let t = thesaurus();
    let once = t.to_text();
    let again = Thesaurus::parse(&once).unwrap();
    assert_eq!(again.to_text(), once);
    assert_eq!(again.len(), t.len());
}

#[test]
fn thesaurus_errors_name_the_line() {
    let cases = [
        "SENSE a.n.01 WORDS a1 GLOSS x\nSENSE a.n.01 WORDS b1 GLOSS y\n",
        "SENSE a.n.01 WORDS a1 GLOSS x\nHYPERNYM a.n.01 b.n.01\n",
        "SENSE a.n.01 WORDS a1 GLOSS x\nSENSE b.n.01 WORDS b1 GLOSS y\nHYPERNYM a.n.01 b.n.01\nHYPERNYM b.n.01 a.n.01\n",
    ];
    for text in cases {
        let e = Thesaurus::parse(text).unwrap_err().to_string();
        assert!(e.contains("line "), "{e}");
    }
    assert!(Thesaurus::parse("").unwrap().is_empty());
}

#[test]
fn breast_cancer_depths_and_lookup() {
    let g = breast_cancer();
    let depth = |id: &str| g.concept(id).unwrap().depth;
    assert_eq!(
        [depth("cancer"), depth("breast_cancer"), depth("leukemia"), depth("lump")],
        [0, 1, 1, 2]
    );
    assert_eq!(g.resolve("mammary_carcinoma").unwrap().concept_id, "breast_cancer");
    assert_eq!(g.resolve("Breast Cancer").unwrap().concept_id, "breast_cancer");
    assert_eq!(g.factor(), 2.0);
}

#[test]
fn worked_distances() {
    let g = OntologyGraph::load(fixture("taxonomy.txt")).unwrap();
    // siblings at depth 2 under a depth-1 parent
    assert_eq!(g.concept_distance("carcinoma", "sarcoma").unwrap(), 0.25);
    assert_eq!(g.concept_similarity("carcinoma", "sarcoma").unwrap(), 0.75);
    assert_eq!(g.concept_distance("cancer", "carcinoma").unwrap(), 0.125);
    assert_eq!(g.ccp("ductal_carcinoma", "lobular_carcinoma").unwrap(), "breast_cancer");
    assert_eq!(g.ccp("neoplasm", "lipoma").unwrap(), "neoplasm");
    assert_eq!(g.relation_similarity("causes", "part_of").unwrap(), 0.5);
    assert_eq!(g.relation_similarity("associated_with", "causes").unwrap(), 0.75);
    assert_eq!(g.relation_similarity("causes", "causes").unwrap(), 1.0);
    assert!(matches!(g.concept_distance("cancer", "ghost"), Err(OntologyError::UnknownConcept(_))));
}

#[test]
fn synonym_short_circuit_is_not_transitive() {
    let g = OntologyGraph::parse(
        "CONCEPT a ROOT LABEL A\nCONCEPT b PARENT a LABEL B\nCONCEPT c PARENT a LABEL C\nSYNONYM b c\nSYNONYM c a\n",
    )
    .unwrap();
    assert_eq!(g.concept_similarity("b", "c").unwrap(), 1.0);
    assert_eq!(g.concept_similarity("a", "c").unwrap(), 1.0);
    assert_eq!(g.concept_similarity("a", "b").unwrap(), 0.75);
}

#[test]
fn ontology_errors_name_the_line() {
    let cases = [
        "CONCEPT a ROOT\nCONCEPT b ROOT\n",
        "CONCEPT a ROOT\nCONCEPT b PARENT z\n",
        "FACTOR 1\nCONCEPT a ROOT\n",
        "CONCEPT a ROOT\nCONCEPT b PARENT c\nCONCEPT c PARENT b\n",
        "CONCEPT a ROOT\nRELATION r ROOT\nEDGE a r q\n",
    ];
    for text in cases {
        let e = OntologyGraph::parse(text).unwrap_err().to_string();
        assert!(e.contains("line"), "{text:?}: {e}");
    }
}

#[test]
fn relabeling_keeps_values() {
    let text = read_fixture("taxonomy.txt");
    let g = OntologyGraph::parse(&text).unwrap();
    let mut renamed = text.clone();
    for c in g.concepts() {
        renamed = renamed
            .split('\n')
            .map(|line| {
                line.split(' ')
                    .map(|w| if w == c.concept_id { format!("x_{w}") } else { w.to_owned() })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n");
    }
    let h = OntologyGraph::parse(&renamed).unwrap();
    for a in g.concepts() {
        for b in g.concepts() {
            let (x, y) = (format!("x_{}", a.concept_id), format!("x_{}", b.concept_id));
            assert_eq!(
                g.concept_similarity(&a.concept_id, &b.concept_id).unwrap(),
                h.concept_similarity(&x, &y).unwrap()
            );
        }
    }
}

/// Random single-rooted trees: node i > 0 hangs under some node < i.
fn tree() -> impl Strategy<Value = (Vec<usize>, f64)> {
    (2usize..20).prop_flat_map(|n| {
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        (parents, 1.1f64..5.0)
    })
}

fn build(parents: &[usize], k: f64) -> OntologyGraph {
    let mut text = format!("FACTOR {k}\nCONCEPT n0 ROOT\n");
    for (i, p) in parents.iter().enumerate() {
        text.push_str(&format!("CONCEPT n{} PARENT n{p}\n", i + 1));
    }
    OntologyGraph::parse(&text).unwrap()
}

proptest! {
    #[test]
    fn distance_invariants((parents, k) in tree()) {
        let g = build(&parents, k);
        let ids: Vec<String> = g.concepts().iter().map(|c| c.concept_id.clone()).collect();
        for a in &ids {
            let m = g.milestone(a).unwrap();
            prop_assert!(m > 0.0 && m <= 0.5);
            prop_assert_eq!(g.concept_similarity(a, a).unwrap(), 1.0);
            for b in &ids {
                let d = g.concept_distance(a, b).unwrap();
                prop_assert_eq!(d, g.concept_distance(b, a).unwrap());
                prop_assert!((0.0..1.0).contains(&d));
                let s = g.concept_similarity(a, b).unwrap();
                prop_assert!(s > 0.0 && s <= 1.0);
            }
        }
    }

    #[test]
    fn legs_shrink_toward_the_node((parents, k) in tree()) {
        let g = build(&parents, k);
        for c in g.concepts() {
            let mut chain = vec![c.concept_id.clone()];
            while let Some(p) = g.concept(chain.last().unwrap()).unwrap().parent.clone() {
                chain.push(p);
            }
            // chain[1] is the parent, chain[last] the root
            let ds: Vec<f64> = chain[1..].iter().map(|a| g.concept_distance(&c.concept_id, a).unwrap()).collect();
            for w in ds.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn depends_only_on_depths((parents, k) in tree()) {
        let g = build(&parents, k);
        let m = |d: usize| 0.5 / k.powi(d as i32);
        for a in g.concepts() {
            for b in g.concepts() {
                let c = g.concept(g.ccp(&a.concept_id, &b.concept_id).unwrap()).unwrap();
                let want = (m(c.depth) - m(a.depth)) + (m(c.depth) - m(b.depth));
                let got = g.concept_distance(&a.concept_id, &b.concept_id).unwrap();
                prop_assert!((got - want).abs() <= 1e-12);
            }
        }
    }
}
