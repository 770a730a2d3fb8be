// SPDX-License-Identifier: Apache-2.0

//! Stimulus files: one line per cycle that changes inputs,
//!
//! ```text
//! # cycle,input=value,...
//! 0,rst=1,data[0]=3,data[1]=2
//! 2,rst=0
//! ```
//!
//! Inputs keep their value until reassigned; inputs never assigned are 0.
//! Within a cycle the last assignment wins.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StimulusError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Input assignments for the cycles listed in a stimulus file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stimulus {
    pub changes: BTreeMap<usize, Vec<(String, u64)>>,
}

pub fn parse_stimulus(text: &str) -> Result<Stimulus, StimulusError> {
    let mut out = Stimulus::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| StimulusError::Syntax {
            line: n + 1,
            message,
        };
        let mut fields = line.split(',').map(str::trim);
        let cycle_text = fields.next().unwrap_or("");
        let cycle: usize = cycle_text
            .parse()
            .map_err(|_| err(format!("invalid cycle number `{cycle_text}`")))?;
        let entry = out.changes.entry(cycle).or_default();
        for f in fields.filter(|f| !f.is_empty()) {
            let (name, value) = f
                .split_once('=')
                .ok_or_else(|| err(format!("expected `input=value`, found `{f}`")))?;
            let value = crate::expr::parse_number(value.trim())
                .ok_or_else(|| err(format!("invalid value `{}`", value.trim())))?;
            entry.push((name.trim().to_string(), value));
        }
    }
    Ok(out)
}

impl Stimulus {
    /// Per-cycle input maps for `cycles` cycles over the given input
    /// element names, holding values between changes.
    pub fn expand(&self, inputs: &[String], cycles: usize) -> Vec<BTreeMap<String, u64>> {
        let mut cur: BTreeMap<String, u64> = inputs.iter().map(|i| (i.clone(), 0)).collect();
        let mut out = Vec::with_capacity(cycles);
        for c in 0..cycles {
            if let Some(changes) = self.changes.get(&c) {
                for (k, v) in changes {
                    cur.insert(k.clone(), *v);
                }
            }
            out.push(cur.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_values_between_changes() {
        let s = parse_stimulus("# header\n0, a=1, b=0x2\n\n2,a=5,a=6 # last wins\n").unwrap();
        let cycles = s.expand(&["a".into(), "b".into(), "c".into()], 4);
        let a: Vec<u64> = cycles.iter().map(|m| m["a"]).collect();
        assert_eq!(a, vec![1, 1, 6, 6]);
        assert_eq!(cycles[3]["b"], 2);
        assert_eq!(cycles[0]["c"], 0);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_stimulus("0,a=1\nx,a=2").unwrap_err();
        assert_eq!(e, StimulusError::Syntax { line: 2, message: "invalid cycle number `x`".into() });
        assert!(parse_stimulus("0,a").is_err());
    }
}
