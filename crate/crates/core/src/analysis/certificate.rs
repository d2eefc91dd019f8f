//! Flat `key = value` text for constants and certificates.

use std::collections::BTreeMap;

use crate::analysis::{
    BusyPeriodMoments, ComparisonMoments, DriftCertificate, InstabilityConstants, LyapunovCoefficients,
};
use crate::error::{Error, Result};

pub trait Certificate {
    fn entries(&self) -> Vec<(String, String)>;

    fn to_kv(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses text written by [`Certificate::to_kv`]. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("line {}: expected key = value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

impl Certificate for InstabilityConstants {
    fn entries(&self) -> Vec<(String, String)> {
        let p = &self.params;
        vec![
            kv("K", p.k),
            kv("lambda", p.lambda),
            kv("mu", p.mu),
            kv("Us", p.us),
            kv("epsilon", self.epsilon),
            kv("xi", self.xi),
            kv("epsilon_o", self.epsilon_o),
            kv("B", self.b),
            kv("N_o", self.n_o),
            kv("rho", self.rho),
        ]
    }
}

impl Certificate for LyapunovCoefficients {
    fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .b
            .iter()
            .enumerate()
            .map(|(i, b)| kv(&format!("b_{i}"), b))
            .collect();
        out.extend(self.a.iter().enumerate().map(|(i, a)| kv(&format!("a_{i}"), a)));
        out
    }
}

impl Certificate for DriftCertificate {
    fn entries(&self) -> Vec<(String, String)> {
        vec![
            kv("eta", self.eta),
            kv("epsilon", self.epsilon),
            kv("L_concentrated", self.l_concentrated),
            kv("L_spread", self.l_spread),
            kv("L", self.l),
            kv("states_checked", self.checked),
        ]
    }
}

impl Certificate for BusyPeriodMoments {
    fn entries(&self) -> Vec<(String, String)> {
        vec![
            kv("rho", self.rho),
            kv("EN", self.en),
            kv("EN2", self.en2),
            kv("EL", self.el),
            kv("EL2", self.el2),
            kv("CovNL", self.cov_nl),
        ]
    }
}

impl Certificate for ComparisonMoments {
    fn entries(&self) -> Vec<(String, String)> {
        vec![
            kv("rho", self.rho),
            kv("EX", self.ex),
            kv("EX2", self.ex2),
            kv("EJ", self.ej),
            kv("EJ2", self.ej2),
            kv("EJ2_bound", self.ej_sq_bound),
            kv("EJ2_chain", self.chain_bound),
            kv("bound_EJ", self.bound_ej),
            kv("bound_EJ2", self.bound_ej2),
            kv("batch_rate", self.batch_rate),
        ]
    }
}
