//! Readers for the tables and `key: value` reports a run writes.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bsde_lab::config::{parse_config, ExperimentKind};
use bsde_lab::output::RunManifest;
use bsde_lab::run::run;

/// Header and rows of a tab-separated table.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Table {
        let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut lines = text.lines().map(|l| l.split('\t').map(str::to_string).collect::<Vec<_>>());
        let header = lines.next().expect("header row");
        Table { header, rows: lines.collect() }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column `{name}`"))
    }

    pub fn f64s(&self, name: &str) -> Vec<f64> {
        let c = self.col(name);
        self.rows.iter().map(|r| r[c].parse().unwrap()).collect()
    }

    /// Value in column `value` of the row whose column `key` equals `k`.
    pub fn lookup(&self, key: &str, k: &str, value: &str) -> f64 {
        let (ck, cv) = (self.col(key), self.col(value));
        let row = self.rows.iter().find(|r| r[ck] == k).unwrap_or_else(|| panic!("no row `{k}`"));
        row[cv].parse().unwrap()
    }
}

/// `key: value` report lines.
pub fn read_report(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter_map(|l| l.split_once(": ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

/// Parses `config` and runs `kind` into `dir`.
pub fn run_toml(kind: ExperimentKind, config: &str, dir: &Path) -> RunManifest {
    let cfg = parse_config(config).unwrap_or_else(|e| panic!("{e}"));
    run(kind, &cfg, dir).unwrap()
}
