pub mod crawler;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod kcore;
pub mod ontology;
pub mod text;
pub mod thesaurus;
