//! The bundled example programs and their expected verdicts.
//!
//! Every program is compiled into the library, so the suite runs without
//! touching the file system. The manifest lists, per file, the cost model,
//! which definitions must typecheck or be rejected, and which processes to
//! run.

use serde::Deserialize;

use crate::cost::CostModel;
use crate::syntax::mangle;

/// `(file name, source text)` for every bundled program.
pub const FILES: &[(&str, &str)] = &[
    ("six.tss", include_str!("../corpus/six.tss")),
    ("copy.tss", include_str!("../corpus/copy.tss")),
    ("plus1.tss", include_str!("../corpus/plus1.tss")),
    ("plus2.tss", include_str!("../corpus/plus2.tss")),
    ("compress.tss", include_str!("../corpus/compress.tss")),
    ("counter.tss", include_str!("../corpus/counter.tss")),
    ("stack.tss", include_str!("../corpus/stack.tss")),
    ("queue.tss", include_str!("../corpus/queue.tss")),
    ("append.tss", include_str!("../corpus/append.tss")),
    ("alternate.tss", include_str!("../corpus/alternate.tss")),
    ("tree.tss", include_str!("../corpus/tree.tss")),
    ("tree_free.tss", include_str!("../corpus/tree_free.tss")),
    ("fold.tss", include_str!("../corpus/fold.tss")),
];

pub const MANIFEST: &str = include_str!("../corpus/manifest.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Ok,
    Rejected,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Check {
    pub def: String,
    #[serde(default)]
    pub args: Vec<u64>,
    pub expect: Expect,
}

#[derive(Clone, Debug, Deserialize)]
pub struct RunSpec {
    pub main: String,
    #[serde(default)]
    pub args: Vec<u64>,
    /// Time of the last message on the root channel, for runs that end.
    pub final_time: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Entry {
    pub file: String,
    cost: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
}

impl Entry {
    pub fn cost(&self) -> CostModel {
        self.cost.parse().expect("manifest cost models are valid")
    }

    pub fn source(&self) -> &'static str {
        source(&self.file).expect("manifest files are bundled")
    }

    /// The file name without its extension.
    pub fn name(&self) -> &str {
        self.file.trim_end_matches(".tss")
    }

    /// Indexed families to ground so that every check and run is covered.
    pub fn roots(&self) -> Vec<(&str, Vec<u64>)> {
        let checks = self.checks.iter().map(|c| (c.def.as_str(), c.args.clone()));
        let runs = self.runs.iter().map(|r| (r.main.as_str(), r.args.clone()));
        checks.chain(runs).filter(|(_, a)| !a.is_empty()).collect()
    }
}

impl Check {
    /// The name of the ground definition this check is about.
    pub fn ground_name(&self) -> String {
        if self.args.is_empty() {
            self.def.clone()
        } else {
            mangle(&self.def, &self.args)
        }
    }
}

#[derive(Debug, Deserialize)]
struct Manifest {
    program: Vec<Entry>,
}

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(f, _)| *f == file).map(|(_, s)| *s)
}

pub fn manifest() -> Vec<Entry> {
    toml::from_str::<Manifest>(MANIFEST).expect("bundled manifest parses").program
}

pub fn entry(name: &str) -> Option<Entry> {
    manifest().into_iter().find(|e| e.name() == name || e.file == name)
}
