use serde::{Deserialize, Serialize};

use super::{StateId, PROB_EPS};
use crate::{Error, Result};

/// Entries at or below this mass are dropped after a transport step.
const PRUNE_BELOW: f64 = 1e-15;

/// Sparse probability distribution over states, sorted by state id.
///
/// Every stored probability is strictly positive and the total is 1 within
/// [`PROB_EPS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    entries: Vec<(StateId, f64)>,
}

impl Belief {
    pub fn delta(s: StateId) -> Self {
        Self {
            entries: vec![(s, 1.0)],
        }
    }

    /// Builds a belief from arbitrary nonnegative weights: duplicates are
    /// merged, nonpositive entries dropped, and the rest normalized.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (StateId, f64)>,
    {
        let mut entries: Vec<(StateId, f64)> = weights.into_iter().collect();
        if entries.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(
                "belief weights must be finite and nonnegative".into(),
            ));
        }
        entries.sort_by_key(|(s, _)| *s);
        let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(entries.len());
        for (s, p) in entries {
            match merged.last_mut() {
                Some((last, q)) if *last == s => *q += p,
                _ => merged.push((s, p)),
            }
        }
        merged.retain(|(_, p)| *p > PRUNE_BELOW);
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if total <= 0.0 {
            return Err(Error::Domain("belief has no positive mass".into()));
        }
        for (_, p) in &mut merged {
            *p /= total;
        }
        Ok(Self { entries: merged })
    }

    pub fn uniform(states: &[StateId]) -> Result<Self> {
        Self::from_weights(states.iter().map(|&s| (s, 1.0)))
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn prob(&self, s: StateId) -> f64 {
        self.entries
            .binary_search_by_key(&s, |(t, _)| *t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn is_delta(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= PROB_EPS && self.entries.iter().all(|(_, p)| *p > 0.0)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .entries
            .iter()
            .map(|(_, p)| if *p > 0.0 { p * p.ln() } else { 0.0 })
            .sum::<f64>()
    }

    /// Pushes the belief through one distribution per support state:
    /// `b'(s') = sum_s b(s) * row_s(s')`. Mass on a state with an empty row
    /// (a terminal state) stays where it is.
    pub fn transport<'r, F>(&self, mut row_of: F) -> Result<Belief>
    where
        F: FnMut(StateId) -> Option<&'r [(StateId, f64)]>,
    {
        let mut mass: Vec<(StateId, f64)> = Vec::new();
        for &(s, p) in &self.entries {
            let row = row_of(s).ok_or_else(|| {
                Error::Contract(format!("no transition row supplied for support state {s}"))
            })?;
            if row.is_empty() {
                mass.push((s, p));
            } else {
                mass.extend(row.iter().map(|&(sp, q)| (sp, p * q)));
            }
        }
        Belief::from_weights(mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_weights_merges_prunes_and_normalizes() {
        let b = Belief::from_weights(vec![
            (StateId(2), 1.0),
            (StateId(0), 0.0),
            (StateId(2), 1.0),
            (StateId(1), 2.0),
        ])
        .unwrap();
        assert_eq!(b.entries(), &[(StateId(1), 0.5), (StateId(2), 0.5)]);
        assert!(b.is_normalized());
    }

    #[test]
    fn rejects_empty_or_negative() {
        assert!(Belief::from_weights(Vec::<(StateId, f64)>::new()).is_err());
        assert!(Belief::from_weights(vec![(StateId(0), -1.0)]).is_err());
    }

    #[test]
    fn delta_transport_is_identity_on_deterministic_rows() {
        let rows = [(StateId(4), 1.0)];
        let b = Belief::delta(StateId(0))
            .transport(|_| Some(&rows[..]))
            .unwrap();
        assert_eq!(b, Belief::delta(StateId(4)));
    }

    #[test]
    fn uniform_over_identical_rows_gives_the_row() {
        let row = [(StateId(2), 0.25), (StateId(3), 0.75)];
        let b = Belief::uniform(&[StateId(0), StateId(1)])
            .unwrap()
            .transport(|_| Some(&row[..]))
            .unwrap();
        assert!((b.prob(StateId(2)) - 0.25).abs() < 1e-15);
        assert!((b.prob(StateId(3)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_rows_keep_their_mass() {
        let row = [(StateId(2), 1.0)];
        let b = Belief::uniform(&[StateId(0), StateId(1)])
            .unwrap()
            .transport(|s| Some(if s == StateId(0) { &row[..] } else { &[] }))
            .unwrap();
        assert_eq!(b.prob(StateId(1)), 0.5);
        assert_eq!(b.prob(StateId(2)), 0.5);
    }

    #[test]
    fn missing_row_is_a_contract_error() {
        let err = Belief::delta(StateId(0)).transport(|_| None).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn entropy_of_fair_coin() {
        let b = Belief::uniform(&[StateId(0), StateId(1)]).unwrap();
        assert!((b.entropy() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(Belief::delta(StateId(3)).entropy(), 0.0);
    }
}
