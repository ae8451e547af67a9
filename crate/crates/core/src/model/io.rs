//! JSON model files.
//!
//! Floats go through `serde_json`'s shortest round-trip formatting, so a
//! written model re-imports bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ControlActionId, ProbInterval, RamMdp, RamMdpBuilder, StateId, UncertainRow};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFileEntry {
    pub sp: u32,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFileRow {
    pub s: u32,
    pub a: u32,
    pub entries: Vec<ModelFileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFileReward {
    pub s: u32,
    pub a: u32,
    pub r: f64,
}

/// On-disk layout of a [`RamMdp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub measure_cost: f64,
    pub initial_state: u32,
    pub terminals: Vec<u32>,
    pub rows: Vec<ModelFileRow>,
    #[serde(default)]
    pub rewards: Vec<ModelFileReward>,
}

impl From<&RamMdp> for ModelFile {
    fn from(m: &RamMdp) -> Self {
        let mut rows = Vec::with_capacity(m.num_states() * m.num_actions());
        let mut rewards = Vec::with_capacity(m.num_states() * m.num_actions());
        for s in m.states() {
            for a in m.actions() {
                rows.push(ModelFileRow {
                    s: s.0,
                    a: a.0,
                    entries: m
                        .row(s, a)
                        .iter()
                        .map(|(sp, iv)| ModelFileEntry {
                            sp: sp.0,
                            lo: iv.lo,
                            hi: iv.hi,
                        })
                        .collect(),
                });
                rewards.push(ModelFileReward {
                    s: s.0,
                    a: a.0,
                    r: m.reward(s, a),
                });
            }
        }
        ModelFile {
            num_states: m.num_states(),
            num_actions: m.num_actions(),
            discount: m.discount(),
            measure_cost: m.measure_cost(),
            initial_state: m.initial_state().0,
            terminals: m.terminal_states().map(|s| s.0).collect(),
            rows,
            rewards,
        }
    }
}

impl ModelFile {
    /// Rebuilds the model. Ids must be in range; every other invariant is
    /// checked by validation, and an invalid model is returned as an error.
    pub fn into_model(self) -> Result<RamMdp> {
        let (ns, na) = (self.num_states, self.num_actions);
        let check = |s: u32, a: u32| -> Result<()> {
            if s as usize >= ns || a as usize >= na {
                Err(Error::Domain(format!(
                    "row ({s}, {a}) outside {ns}x{na} model"
                )))
            } else {
                Ok(())
            }
        };
        let mut b = RamMdpBuilder::new(ns, na)
            .discount(self.discount)
            .measure_cost(self.measure_cost)
            .initial_state(StateId(self.initial_state));
        for row in self.rows {
            check(row.s, row.a)?;
            let entries = row
                .entries
                .into_iter()
                .map(|e| (StateId(e.sp), ProbInterval::new(e.lo, e.hi)))
                .collect();
            b.set_row(
                StateId(row.s),
                ControlActionId(row.a),
                UncertainRow::new(entries),
            );
        }
        for r in self.rewards {
            check(r.s, r.a)?;
            b.set_reward(StateId(r.s), ControlActionId(r.a), r.r);
        }
        for t in self.terminals {
            if t as usize >= ns {
                return Err(Error::Domain(format!("terminal {t} out of range")));
            }
            b.flag_terminal(StateId(t));
        }
        b.build_validated()
    }
}

impl RamMdp {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &ModelFile::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        file.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_json(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_json(BufReader::new(File::open(path)?))
    }
}
