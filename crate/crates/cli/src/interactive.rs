use std::io::{BufRead, Write};

use ontosearch::expansion::{Candidates, Selection, Selector};

/// Prints numbered candidates and reads one concept and one sense choice
/// per line. A blank line or `-` skips; a number or an id picks. End of
/// input aborts the selection.
pub struct Interactive<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> Interactive<R, W> {
    pub fn new(input: R, out: W) -> Self {
        Self { input, out }
    }

    fn list(&mut self, c: &Candidates) -> std::io::Result<()> {
        writeln!(self.out, "k-cores:")?;
        for m in &c.kcores {
            writeln!(
                self.out,
                "  #{} {:.6} {} (relevance {})",
                m.rank,
                m.kcore.score,
                m.kcore.terms.join(","),
                m.relevance
            )?;
        }
        writeln!(self.out, "concepts:")?;
        for (i, x) in c.concepts.iter().enumerate() {
            writeln!(
                self.out,
                "  [{}] {} \"{}\" {:.6}",
                i + 1,
                x.concept_id,
                x.label,
                x.similarity_score
            )?;
        }
        writeln!(self.out, "senses:")?;
        let senses = c.senses.iter().flat_map(|t| &t.candidates);
        for (i, s) in senses.enumerate() {
            writeln!(self.out, "  [{}] {} {}: {}", i + 1, s.sense_id, s.lemma, s.gloss)?;
        }
        self.out.flush()
    }

    fn choose(&mut self, what: &str, ids: &[&str]) -> Result<Option<String>, String> {
        if ids.is_empty() {
            return Ok(None);
        }
        loop {
            writeln!(self.out, "{what}? [1-{}, id, blank for none]", ids.len()).map_err(|e| e.to_string())?;
            self.out.flush().map_err(|e| e.to_string())?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(|e| e.to_string())? == 0 {
                return Err("standard input closed".into());
            }
            let choice = line.trim();
            if choice.is_empty() || choice == "-" {
                return Ok(None);
            }
            let picked = match choice.parse::<usize>() {
                Ok(i) if (1..=ids.len()).contains(&i) => Some(ids[i - 1]),
                Ok(_) => None,
                Err(_) => ids.iter().copied().find(|&id| id == choice),
            };
            match picked {
                Some(id) => return Ok(Some(id.to_owned())),
                None => writeln!(self.out, "not a choice: {choice}").map_err(|e| e.to_string())?,
            }
        }
    }
}

impl<R: BufRead, W: Write> Selector for Interactive<R, W> {
    fn select(&mut self, c: &Candidates) -> Result<Selection, String> {
        self.list(c).map_err(|e| e.to_string())?;
        let concepts: Vec<&str> = c.concepts.iter().map(|x| x.concept_id.as_str()).collect();
        let senses: Vec<&str> = c
            .senses
            .iter()
            .flat_map(|t| &t.candidates)
            .map(|s| s.sense_id.as_str())
            .collect();
        let concept = self.choose("concept", &concepts)?;
        let sense = self.choose("sense", &senses)?;
        Ok(Selection { concept, sense })
    }
}
