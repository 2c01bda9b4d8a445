use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::CrawlError;

const HEADER: &str = "serial\turl\tis_crawled";

/// One row of the crawl table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrawlRecord {
    pub serial: u64,
    pub url: String,
    pub is_crawled: bool,
}

impl CrawlRecord {
    pub fn flag(&self) -> char {
        if self.is_crawled {
            't'
        } else {
            'f'
        }
    }
}

/// Crawl table in insertion order. Serials are dense from 1 and urls unique.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrawlTable {
    records: Vec<CrawlRecord>,
}

impl CrawlTable {
    pub fn records(&self) -> &[CrawlRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, url: &str) -> Option<&CrawlRecord> {
        self.records.iter().find(|r| r.url == url)
    }

    pub(crate) fn push(&mut self, url: String) -> usize {
        let serial = self.records.len() as u64 + 1;
        self.records.push(CrawlRecord {
            serial,
            url,
            is_crawled: false,
        });
        self.records.len() - 1
    }

    pub(crate) fn mark_crawled(&mut self, position: usize) {
        self.records[position].is_crawled = true;
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{}", r.serial, r.url, r.flag());
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, CrawlError> {
        let bad = |line: usize, msg: &str| CrawlError::Table {
            line,
            msg: msg.to_owned(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some(HEADER) {
            return Err(bad(1, "expected header `serial<TAB>url<TAB>is_crawled`"));
        }
        let mut table = Self::default();
        for (lineno, line) in lines {
            let [serial, url, flag] = line.split('\t').collect::<Vec<_>>()[..] else {
                return Err(bad(lineno, "expected three tab-separated fields"));
            };
            let serial: u64 = serial.parse().map_err(|_| bad(lineno, "bad serial"))?;
            if serial != table.records.len() as u64 + 1 {
                return Err(bad(lineno, "serials must be dense and start at 1"));
            }
            let is_crawled = match flag {
                "t" => true,
                "f" => false,
                _ => return Err(bad(lineno, "flag must be `t` or `f`")),
            };
            if table.get(url).is_some() {
                return Err(bad(lineno, "duplicate url"));
            }
            table.records.push(CrawlRecord {
                serial,
                url: url.to_owned(),
                is_crawled,
            });
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CrawlError> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CrawlError> {
        Self::from_tsv(&fs::read_to_string(path)?)
    }
}
