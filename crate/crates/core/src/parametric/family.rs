//! Eventually-Poisson renewal families and their unifilar realizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{Machine, MachineBuilder, Symbol};

const SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalKind {
    /// Arbitrary head on runs of 0s; runs of 1s geometric.
    Renewal,
    /// Arbitrary head on runs of 1s; runs of 0s geometric.
    ReverseRenewal,
}

impl RenewalKind {
    /// The symbol whose run lengths the family describes.
    pub fn counted_symbol(self) -> Symbol {
        match self {
            RenewalKind::Renewal => 0,
            RenewalKind::ReverseRenewal => 1,
        }
    }
}

/// Run-length distribution given by an explicit head `p(0..=n_tilde)` and a
/// geometric tail with ratio `lambda_tail`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalFamily {
    kind: RenewalKind,
    head: Vec<f64>,
    lambda_tail: f64,
}

impl RenewalFamily {
    pub fn new(kind: RenewalKind, head: Vec<f64>) -> Result<Self> {
        let Some(&last) = head.last() else {
            return Err(Error::InvalidFamily("head must have at least one entry".into()));
        };
        if let Some(p) = head.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidFamily(format!("head entry {p} outside [0, 1]")));
        }
        let n_tilde = head.len() - 1;
        let before: f64 = head[..n_tilde].iter().sum();
        let mut partial = 0.0;
        for (n, p) in head[..n_tilde].iter().enumerate() {
            partial += p;
            if partial >= 1.0 {
                return Err(Error::InvalidFamily(format!("partial sum reaches 1 at index {n} < {n_tilde}")));
            }
        }
        let total = before + last;
        if total > 1.0 + SUM_TOL {
            return Err(Error::InvalidFamily(format!("head sums to {total} > 1")));
        }
        if last <= 0.0 {
            return Err(Error::InvalidFamily(
                "last head entry must be positive for the tail ratio to be below 1".into(),
            ));
        }
        let lambda_tail = ((1.0 - total) / (1.0 - before)).clamp(0.0, 1.0);
        Ok(Self { kind, head, lambda_tail })
    }

    pub fn renewal(head: Vec<f64>) -> Result<Self> {
        Self::new(RenewalKind::Renewal, head)
    }

    pub fn reverse(head: Vec<f64>) -> Result<Self> {
        Self::new(RenewalKind::ReverseRenewal, head)
    }

    pub fn kind(&self) -> RenewalKind {
        self.kind
    }

    pub fn n_tilde(&self) -> usize {
        self.head.len() - 1
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn lambda_tail(&self) -> f64 {
        self.lambda_tail
    }

    /// Probability of a run of exactly `n`.
    pub fn pmf(&self, n: usize) -> f64 {
        let nt = self.n_tilde();
        if n <= nt {
            self.head[n]
        } else {
            self.head[nt] * self.lambda_tail.powi((n - nt) as i32)
        }
    }

    /// Survival `P(N >= n)`.
    pub fn survival(&self, n: usize) -> f64 {
        let nt = self.n_tilde();
        if n <= nt {
            1.0 - self.head[..n].iter().sum::<f64>()
        } else {
            self.survival(nt) * self.lambda_tail.powi((n - nt) as i32)
        }
    }

    /// Probability that a run already `n` long ends at `n`; constant past `n_tilde`.
    pub fn hazard(&self, n: usize) -> f64 {
        if n >= self.n_tilde() {
            return 1.0 - self.lambda_tail;
        }
        let w = self.survival(n);
        (self.head[n] / w).clamp(0.0, 1.0)
    }
}

pub fn interevent_pmf(fam: &RenewalFamily, n: usize) -> f64 {
    fam.pmf(n)
}

/// Alternating process whose quiescent and active run lengths both follow
/// eventually geometric distributions. Each component's pmf is indexed by run
/// length minus one, since a run of either symbol holds at least one bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingRenewalFamily {
    pub quiescence: RenewalFamily,
    pub activity: RenewalFamily,
}

impl AlternatingRenewalFamily {
    pub fn new(quiescence: RenewalFamily, activity: RenewalFamily) -> Result<Self> {
        if quiescence.kind != RenewalKind::Renewal || activity.kind != RenewalKind::ReverseRenewal {
            return Err(Error::InvalidFamily("quiescence must be a renewal head and activity a reverse head".into()));
        }
        Ok(Self { quiescence, activity })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Renewal(RenewalFamily),
    Alternating(AlternatingRenewalFamily),
}

impl From<RenewalFamily> for Family {
    fn from(f: RenewalFamily) -> Self {
        Family::Renewal(f)
    }
}

impl From<AlternatingRenewalFamily> for Family {
    fn from(f: AlternatingRenewalFamily) -> Self {
        Family::Alternating(f)
    }
}

fn emit(counted: Symbol, p_end: f64) -> Vec<f64> {
    // p_end is the probability of the symbol that ends the current run.
    let mut e = vec![0.0; 2];
    e[usize::from(1 - counted)] = p_end;
    e[usize::from(counted)] = 1.0 - p_end;
    e
}

fn add_if(b: &mut MachineBuilder, from: usize, sym: Symbol, to: usize, p: f64) {
    if p > 0.0 {
        b.transition(from, sym, to);
    }
}

/// Unifilar machine realizing the family, with a synchronizing suffix map.
pub fn family_to_machine(fam: &Family) -> Machine {
    let mut b = MachineBuilder::epsilon_machine();
    match fam {
        Family::Renewal(f) => {
            let c = f.kind.counted_symbol();
            let nt = f.n_tilde();
            for n in 0..=nt {
                b.state(emit(c, f.hazard(n)));
            }
            for n in 0..=nt {
                let h = f.hazard(n);
                add_if(&mut b, n, 1 - c, 0, h);
                add_if(&mut b, n, c, (n + 1).min(nt), 1.0 - h);
            }
        }
        Family::Alternating(a) => {
            // Quiescent states q_k hold k+1 zeros; active states a_k hold k+1 ones.
            let nq = a.quiescence.n_tilde() + 1;
            let na = a.activity.n_tilde() + 1;
            for k in 0..nq {
                let s = b.state(emit(0, a.quiescence.hazard(k)));
                b.label(s, format!("q{k}"));
            }
            for k in 0..na {
                let s = b.state(emit(1, a.activity.hazard(k)));
                b.label(s, format!("a{k}"));
            }
            for k in 0..nq {
                let h = a.quiescence.hazard(k);
                add_if(&mut b, k, 1, nq, h);
                add_if(&mut b, k, 0, (k + 1).min(nq - 1), 1.0 - h);
            }
            for k in 0..na {
                let h = a.activity.hazard(k);
                add_if(&mut b, nq + k, 0, 0, h);
                add_if(&mut b, nq + k, 1, nq + (k + 1).min(na - 1), 1.0 - h);
            }
        }
    }
    let m = b.build().expect("family machines are valid by construction");
    let n = m.num_states();
    m.with_synchronizing_suffixes(n + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_reduction() {
        let f = RenewalFamily::renewal(vec![0.5]).unwrap();
        assert_eq!(f.lambda_tail(), 0.5);
        for k in 0..20 {
            assert!((f.pmf(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_ratio_and_pmf() {
        let f = RenewalFamily::renewal(vec![0.2, 0.3]).unwrap();
        assert!((f.lambda_tail() - 0.625).abs() < 1e-15);
        assert!((f.pmf(2) - 0.1875).abs() < 1e-15);
        let total: f64 = (0..2000).map(|n| f.pmf(n)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hazard_is_conditional_pmf() {
        let f = RenewalFamily::renewal(vec![0.1, 0.3, 0.2]).unwrap();
        for n in 0..30 {
            let direct = f.pmf(n) / f.survival(n);
            assert!((f.hazard(n) - direct).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn invalid_heads() {
        assert!(RenewalFamily::renewal(vec![]).is_err());
        assert!(RenewalFamily::renewal(vec![1.2]).is_err());
        assert!(RenewalFamily::renewal(vec![0.6, 0.6]).is_err());
        assert!(RenewalFamily::renewal(vec![1.0, 0.0]).is_err());
        assert!(RenewalFamily::renewal(vec![0.3, 0.0]).is_err());
    }

    #[test]
    fn bernoulli_machine_from_empty_memory() {
        let m = family_to_machine(&RenewalFamily::renewal(vec![0.3]).unwrap().into());
        assert_eq!(m.num_states(), 1);
        assert!((m.emission(0, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn renewal_chain_has_unique_reset_state() {
        let m = family_to_machine(&RenewalFamily::renewal(vec![0.1, 0.3, 0.2]).unwrap().into());
        assert_eq!(m.num_states(), 3);
        let entered_on_one: std::collections::BTreeSet<_> =
            m.transitions().filter(|&(_, a, _)| a == 1).map(|(_, _, t)| t).collect();
        assert_eq!(entered_on_one.len(), 1);
        assert_eq!(m.transition(2, 0), Some(2));
    }

    #[test]
    fn alternating_one_two_has_five_states() {
        let a = AlternatingRenewalFamily::new(
            RenewalFamily::renewal(vec![0.1, 0.4, 0.3]).unwrap(),
            RenewalFamily::reverse(vec![0.5, 0.2]).unwrap(),
        )
        .unwrap();
        let m = family_to_machine(&a.into());
        assert_eq!(m.num_states(), 5);
        assert_eq!(m.transition(0, 1), Some(3));
        assert_eq!(m.transition(4, 0), Some(0));
    }
}
