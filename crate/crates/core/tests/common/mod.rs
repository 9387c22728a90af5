#![allow(dead_code)]

pub mod corpus;
pub mod dd;
pub mod fragments;
pub mod gen;
pub mod oracle;

use std::path::Path;

/// Writes `(problem, name, source)` triples as `<root>/<problem>/<name>.c`.
pub fn write_corpus(root: &Path, corpus: &[(String, String, String)]) {
    for (problem, name, src) in corpus {
        let dir = root.join(problem);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join(format!("{name}.c")), src).unwrap();
    }
}
