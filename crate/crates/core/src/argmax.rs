//! Locating a maximizing index: the closed form for rank-1 tensors and a
//! binary search over mode halves steered by the converged iterate.

use crate::arith::{
    hadamard_compressed, remove_zero_rows, root_norm, select_rows, slice, stable_norm, truncate_eps,
};
use crate::error::{HtError, Result};
use crate::maxnorm::{adaptive_maxnorm, IterationConfig};
use crate::tensor::{HtTensor, MultiIndex};

/// Halves whose scores differ by less than this, relatively, are a tie.
pub const TIE_TOL: f64 = 1e-6;
/// Rows of the final iterate below this fraction of its largest entry count
/// as zero.
pub const ZERO_ROW_TOL: f64 = 1e-12;
/// An iterate that truncates to rank 1 at this relative accuracy is treated
/// as elementary.
pub const RANK_ONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Shortcuts {
    pub rank_one: bool,
    pub zero_rows_removed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxResult {
    /// 1-based, in the coordinates of the input tensor.
    pub index: MultiIndex,
    /// The entry at `index`, evaluated on the input tensor.
    pub value: f64,
    pub estimated_maxnorm: f64,
    /// Committed halvings.
    pub iterations_used: usize,
    /// Half evaluations, tied ones included.
    pub evaluations: usize,
    pub shortcuts: Shortcuts,
}

/// `sum ceil(log2 n_mu)`: the most halvings a search can commit.
pub fn search_iteration_bound(mode_sizes: &[usize]) -> usize {
    mode_sizes
        .iter()
        .map(|&n| {
            if n <= 1 {
                0
            } else {
                (usize::BITS - (n - 1).leading_zeros()) as usize
            }
        })
        .sum()
}

fn first_abs_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Maximizes each factor of a rank-1 tensor; the smallest index wins ties.
pub fn elementary_argmax(a: &HtTensor) -> Result<ArgmaxResult> {
    if !a.is_elementary() {
        return Err(HtError::NotElementary(a.ranks()));
    }
    let idx: Vec<usize> = (1..=a.order())
        .map(|mu| first_abs_max(&a.frame(mu).column(0)) + 1)
        .collect();
    let index = MultiIndex::new(idx);
    let value = a.entry(&index)?;
    Ok(ArgmaxResult {
        index,
        value,
        estimated_maxnorm: value.abs(),
        iterations_used: 0,
        evaluations: 0,
        shortcuts: Shortcuts {
            rank_one: true,
            zero_rows_removed: false,
        },
    })
}

/// Current search box: per mode an inclusive 0-based range into the
/// reduced tensor.
struct SearchState {
    a: HtTensor,
    x: HtTensor,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl SearchState {
    /// Score of the 0-based local range `l..=h` of mode `mu`:
    /// `‖a_h ∘ x_h‖ / ‖x_h‖`, zero where the iterate vanishes.
    fn score(&self, mu: usize, l: usize, h: usize) -> Result<f64> {
        let xh = slice(&self.x, mu, l + 1, h + 1)?;
        let nx = stable_norm(&xh);
        if nx == 0.0 {
            return Ok(0.0);
        }
        let ah = slice(&self.a, mu, l + 1, h + 1)?;
        let s = root_norm(&hadamard_compressed(&ah, &xh)?) / nx;
        if s.is_finite() {
            Ok(s)
        } else {
            Err(HtError::NonFinite("half score".into()))
        }
    }

    /// Keeps the local range `l..=h` of mode `mu`.
    fn commit(&mut self, mu: usize, l: usize, h: usize) -> Result<()> {
        self.a = slice(&self.a, mu, l + 1, h + 1)?;
        self.x = slice(&self.x, mu, l + 1, h + 1)?;
        let base = self.lo[mu - 1];
        self.lo[mu - 1] = base + l;
        self.hi[mu - 1] = base + h;
        Ok(())
    }

    fn width(&self, mu: usize) -> usize {
        self.hi[mu - 1] - self.lo[mu - 1] + 1
    }
}

/// Binary search for an index of a large entry. Runs the adaptive estimator,
/// strips zero rows from its final iterate, and either reads the index off a
/// rank-1 iterate or halves one mode at a time, keeping the half with the
/// larger score. Tied modes are deferred; when only tied modes remain, the
/// first is forced toward its strictly larger half, else its first half.
pub fn binary_search_argmax(a: &HtTensor, cfg: &IterationConfig) -> Result<ArgmaxResult> {
    if a.is_elementary() {
        return elementary_argmax(a);
    }
    let d = a.order();
    let fail = |fixed: Vec<Option<usize>>, e: HtError| HtError::SearchFailed {
        fixed,
        source: Box::new(e),
    };
    let est = adaptive_maxnorm(a, cfg).map_err(|e| fail(vec![None; d], e))?;
    let (x, maps) =
        remove_zero_rows(&est.final_iterate, ZERO_ROW_TOL).map_err(|e| fail(vec![None; d], e))?;
    let removed = x.mode_sizes() != a.mode_sizes();
    let mut reduced = a.clone();
    for (mu, map) in maps.iter().enumerate() {
        if map.len() < a.mode_sizes()[mu] {
            let rows: Vec<usize> = map.iter().map(|i| i - 1).collect();
            reduced = select_rows(&reduced, mu + 1, &rows)?;
        }
    }
    let translate = |local: &[usize]| -> MultiIndex {
        MultiIndex::new(local.iter().zip(&maps).map(|(&i, m)| m[i]).collect())
    };
    let shortcuts = Shortcuts {
        rank_one: false,
        zero_rows_removed: removed,
    };

    let (rank_one, _) = truncate_eps(&x, RANK_ONE_TOL).map_err(|e| fail(vec![None; d], e))?;
    if rank_one.is_elementary() {
        let local: Vec<usize> = (1..=d)
            .map(|mu| first_abs_max(&rank_one.frame(mu).column(0)))
            .collect();
        let index = translate(&local);
        return Ok(ArgmaxResult {
            value: a.entry(&index)?,
            index,
            estimated_maxnorm: est.value,
            iterations_used: 0,
            evaluations: 0,
            shortcuts: Shortcuts {
                rank_one: true,
                ..shortcuts
            },
        });
    }

    let sizes = x.mode_sizes().to_vec();
    let mut state = SearchState {
        a: reduced,
        x,
        lo: vec![0; d],
        hi: sizes.iter().map(|n| n - 1).collect(),
    };
    let partial = |s: &SearchState| -> Vec<Option<usize>> {
        (0..d)
            .map(|m| (s.lo[m] == s.hi[m]).then(|| maps[m][s.lo[m]]))
            .collect()
    };
    let mut cache: Vec<Option<(f64, f64)>> = vec![None; d];
    let mut deferred = vec![false; d];
    let mut iterations = 0;
    let mut evaluations = 0;
    loop {
        let open: Vec<usize> = (1..=d).filter(|&mu| state.width(mu) > 1).collect();
        if open.is_empty() {
            break;
        }
        let pick = open.iter().copied().find(|&mu| !deferred[mu - 1]);
        let mu = pick.unwrap_or(open[0]);
        let m = state.width(mu);
        let split = m.div_ceil(2);
        let (s1, s2) = match cache[mu - 1] {
            Some(s) => s,
            None => {
                let s1 = state
                    .score(mu, 0, split - 1)
                    .map_err(|e| fail(partial(&state), e))?;
                let s2 = state
                    .score(mu, split, m - 1)
                    .map_err(|e| fail(partial(&state), e))?;
                evaluations += 2;
                cache[mu - 1] = Some((s1, s2));
                (s1, s2)
            }
        };
        let tied = (s1 - s2).abs() < TIE_TOL * s1.max(s2);
        if tied && pick.is_some() {
            deferred[mu - 1] = true;
            continue;
        }
        let (l, h) = if s2 > s1 {
            (split, m - 1)
        } else {
            (0, split - 1)
        };
        state
            .commit(mu, l, h)
            .map_err(|e| fail(partial(&state), e))?;
        iterations += 1;
        cache.iter_mut().for_each(|c| *c = None);
        deferred.iter_mut().for_each(|f| *f = false);
    }
    let index = translate(&state.lo);
    Ok(ArgmaxResult {
        value: a.entry(&index)?,
        index,
        estimated_maxnorm: est.value,
        iterations_used: iterations,
        evaluations,
        shortcuts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{from_elementary, random_ht};
    use crate::oracle::{dense_maxnorm_argmax, densify};

    #[test]
    fn bounds() {
        assert_eq!(search_iteration_bound(&[100; 16]), 112);
        assert_eq!(search_iteration_bound(&[1, 1, 1]), 0);
        assert_eq!(search_iteration_bound(&[8; 4]), 12);
        assert_eq!(search_iteration_bound(&[2, 3, 5]), 1 + 2 + 3);
    }

    #[test]
    fn elementary_closed_form() {
        let a = from_elementary(&[vec![1.0, -3.0], vec![2.0, 1.0]]).unwrap();
        let r = elementary_argmax(&a).unwrap();
        assert_eq!(r.index, MultiIndex::new(vec![2, 1]));
        assert_eq!(r.value, -6.0);
        assert_eq!(r.estimated_maxnorm, 6.0);
        let ones = from_elementary(&[vec![1.0; 3], vec![1.0; 4]]).unwrap();
        assert_eq!(
            elementary_argmax(&ones).unwrap().index,
            MultiIndex::new(vec![1, 1])
        );
        let r = binary_search_argmax(&a, &IterationConfig::default()).unwrap();
        assert!(r.shortcuts.rank_one && r.iterations_used == 0);
    }

    #[test]
    fn rejects_higher_rank() {
        let a = random_ht(3, 3, 2, 1).unwrap();
        assert!(matches!(
            elementary_argmax(&a),
            Err(HtError::NotElementary(_))
        ));
    }

    #[test]
    fn finds_dense_maximum() {
        for seed in 0..4 {
            let a = random_ht(4, 5, 2, seed).unwrap();
            let (truth, _) = dense_maxnorm_argmax(&densify(&a).unwrap()).unwrap();
            let r = binary_search_argmax(&a, &IterationConfig::default()).unwrap();
            assert!((r.value.abs() - truth).abs() < 1e-12 * truth, "seed {seed}");
            assert!(r.iterations_used <= search_iteration_bound(a.mode_sizes()));
        }
    }
}
