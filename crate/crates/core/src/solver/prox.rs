//! Proximal operators and the norms they belong to.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::svd::{scaled_product, svd_economy};
use super::SolverError;
use crate::partition::GroupPartition;

/// How a group's size enters its shrinkage threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `λ·√|C_i|/μ`: the exact proximal operator of the size-weighted
    /// group norm.
    #[default]
    Sqrt,
    /// `λ·|C_i|/μ`.
    Linear,
}

impl std::str::FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt" => Ok(Self::Sqrt),
            "linear" => Ok(Self::Linear),
            other => Err(format!(
                "unknown weight mode '{other}' (expected sqrt or linear)"
            )),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sqrt => "sqrt",
            Self::Linear => "linear",
        })
    }
}

impl WeightMode {
    #[inline]
    pub fn weight(self, size: usize) -> f64 {
        match self {
            Self::Sqrt => (size as f64).sqrt(),
            Self::Linear => size as f64,
        }
    }
}

pub fn frobenius_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l1_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

pub fn nuclear_norm(m: &Array2<f64>) -> Result<f64, SolverError> {
    Ok(svd_economy(m)?.s.sum())
}

/// Singular value thresholding with the shrunk spectrum.
pub(crate) fn svt_with_spectrum(
    m: &Array2<f64>,
    tau: f64,
) -> Result<(Array2<f64>, Vec<f64>), SolverError> {
    let svd = svd_economy(m)?;
    let kept: Vec<f64> = svd
        .s
        .iter()
        .map(|&s| s - tau)
        .take_while(|&s| s > 0.0)
        .collect();
    if kept.is_empty() {
        return Ok((Array2::zeros(m.dim()), kept));
    }
    Ok((scaled_product(&svd.u, &kept, &svd.v), kept))
}

/// Proximal operator of `tau·‖X‖_*`.
pub fn svt(m: &Array2<f64>, tau: f64) -> Result<Array2<f64>, SolverError> {
    if !(tau >= 0.0) {
        return Err(SolverError::Threshold(tau));
    }
    Ok(svt_with_spectrum(m, tau)?.0)
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Entrywise soft threshold: the proximal operator of `t·‖X‖₁`.
pub fn l1_shrink(m: &Array2<f64>, t: f64) -> Array2<f64> {
    m.mapv(|x| soft(x, t))
}

fn group_sumsq(m: &Array2<f64>, partition: &GroupPartition) -> Vec<f64> {
    let rows = partition.rows();
    let mut sums = vec![0.0; partition.group_count()];
    let labels = partition.labels();
    for (k, col) in m.columns().into_iter().enumerate() {
        let labels = &labels[k * rows..(k + 1) * rows];
        for (&x, &l) in col.iter().zip(labels) {
            sums[l as usize] += x * x;
        }
    }
    sums
}

/// `Σ_i √(|C_i| · Σ_{(j,k)∈C_i} E_jk²)`.
pub fn generalized_l21_norm(
    e: &Array2<f64>,
    partition: &GroupPartition,
) -> Result<f64, SolverError> {
    partition.check_shape(e.nrows(), e.ncols())?;
    Ok(group_sumsq(e, partition)
        .iter()
        .zip(partition.sizes())
        .map(|(&ss, &size)| (size as f64 * ss).sqrt())
        .sum())
}

/// `Σ_i weight(|C_i|) · ‖E_{C_i}‖₂`; equals [`generalized_l21_norm`] in
/// `Sqrt` mode.
pub fn weighted_group_norm(
    e: &Array2<f64>,
    partition: &GroupPartition,
    mode: WeightMode,
) -> Result<f64, SolverError> {
    partition.check_shape(e.nrows(), e.ncols())?;
    Ok(group_sumsq(e, partition)
        .iter()
        .zip(partition.sizes())
        .map(|(&ss, &size)| mode.weight(size) * ss.sqrt())
        .sum())
}

/// Group soft threshold: every group `C_i` is either zeroed or scaled by
/// `(‖M_{C_i}‖₂ − t_i)/‖M_{C_i}‖₂` with `t_i = λ·weight(|C_i|)/μ`.
pub fn group_shrink(
    m: &Array2<f64>,
    partition: &GroupPartition,
    lambda: f64,
    mu: f64,
    mode: WeightMode,
) -> Result<Array2<f64>, SolverError> {
    partition.check_shape(m.nrows(), m.ncols())?;
    let scale: Vec<f64> = group_sumsq(m, partition)
        .iter()
        .zip(partition.sizes())
        .map(|(&ss, &size)| {
            let norm = ss.sqrt();
            let t = lambda * mode.weight(size) / mu;
            if norm > t {
                (norm - t) / norm
            } else {
                0.0
            }
        })
        .collect();
    let rows = partition.rows();
    let labels = partition.labels();
    let mut out = Array2::zeros(m.dim());
    Zip::indexed(&mut out).and(m).for_each(|(j, k), o, &x| {
        let s = scale[labels[k * rows + j] as usize];
        *o = if s == 0.0 { 0.0 } else { s * x };
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_matrix, random_partition};
    use ndarray::array;

    #[test]
    fn soft_threshold_definition() {
        let m = array![[5.0, -1.0], [-4.0, 0.5]];
        assert_eq!(l1_shrink(&m, 2.0), array![[3.0, 0.0], [-2.0, 0.0]]);
        assert_eq!(l1_shrink(&m, 0.0), m);
        assert!(l1_shrink(&m, 10.0).iter().all(|x| x.to_bits() == 0));
    }

    #[test]
    fn svt_examples() {
        let d = array![[3.0, 0.0], [0.0, 1.0]];
        let out = svt(&d, 2.0).unwrap();
        for (x, y) in out.iter().zip(array![[1.0, 0.0], [0.0, 0.0]].iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let m = random_matrix(9, 5, 11);
        let same = svt(&m, 0.0).unwrap();
        assert!(frobenius_norm(&(&same - &m)) < 1e-10);
        assert!(svt(&m, -1.0).is_err());
        assert!(svt(&m, 1e6).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn group_shrink_three_four() {
        let m = array![[3.0], [4.0]];
        let p = GroupPartition::whole(2, 1);
        // t = λ·√2/μ = 2 with λ = √2, μ = 1
        let out = group_shrink(&m, &p, 2f64.sqrt(), 1.0, WeightMode::Sqrt).unwrap();
        assert!((out[[0, 0]] - 1.8).abs() < 1e-12 && (out[[1, 0]] - 2.4).abs() < 1e-12);
        // t = λ·2/μ = 2 with λ = 1
        let out = group_shrink(&m, &p, 1.0, 1.0, WeightMode::Linear).unwrap();
        assert!((out[[0, 0]] - 1.8).abs() < 1e-12 && (out[[1, 0]] - 2.4).abs() < 1e-12);
    }

    #[test]
    fn group_below_threshold_is_bitwise_zero() {
        let m = array![[-3.0, 4.0], [0.5, -0.5]];
        let p = GroupPartition::from_labels(2, 2, vec![0, 1, 0, 1]).unwrap();
        let out = group_shrink(&m, &p, 10.0, 1.0, WeightMode::Sqrt).unwrap();
        assert!(out.iter().all(|x| x.to_bits() == 0));
    }

    #[test]
    fn singleton_groups_match_soft_threshold() {
        let m = random_matrix(12, 7, 5);
        let p = GroupPartition::singletons(12, 7);
        let (lambda, mu) = (0.3, 0.7);
        let g = group_shrink(&m, &p, lambda, mu, WeightMode::Sqrt).unwrap();
        let s = l1_shrink(&m, lambda / mu);
        for (a, b) in g.iter().zip(s.iter()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn norm_identities() {
        let e = random_matrix(8, 5, 2);
        let singles = generalized_l21_norm(&e, &GroupPartition::singletons(8, 5)).unwrap();
        assert!((singles - l1_norm(&e)).abs() < 1e-12);
        let cols = generalized_l21_norm(&e, &GroupPartition::columns(8, 5)).unwrap();
        let l21: f64 = e
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum();
        assert!((cols - 8f64.sqrt() * l21).abs() < 1e-12);
        assert_eq!(
            generalized_l21_norm(&Array2::zeros((3, 3)), &GroupPartition::whole(3, 3)).unwrap(),
            0.0
        );
        assert!(generalized_l21_norm(&e, &GroupPartition::whole(5, 8)).is_err());
    }

    #[test]
    fn groups_scale_atomically() {
        let m = random_matrix(15, 6, 9);
        let p = random_partition(15, 6, 10, 4);
        let out = group_shrink(&m, &p, 0.2, 1.0, WeightMode::Sqrt).unwrap();
        for members in p.groups() {
            let ratios: Vec<f64> = members
                .iter()
                .map(|&(j, k)| out[[j, k]] / m[[j, k]])
                .collect();
            let all_zero = members.iter().all(|&(j, k)| out[[j, k]] == 0.0);
            let same = ratios
                .iter()
                .all(|r| (r - ratios[0]).abs() < 1e-12 && *r > 0.0);
            assert!(all_zero || same);
        }
    }

    #[test]
    fn operators_are_nonexpansive() {
        let p = random_partition(10, 6, 7, 1);
        for seed in 0..20 {
            let a = random_matrix(10, 6, 100 + seed);
            let b = random_matrix(10, 6, 200 + seed);
            let d = frobenius_norm(&(&a - &b));
            let pairs = [
                (svt(&a, 0.7).unwrap(), svt(&b, 0.7).unwrap()),
                (l1_shrink(&a, 0.4), l1_shrink(&b, 0.4)),
                (
                    group_shrink(&a, &p, 0.5, 1.0, WeightMode::Sqrt).unwrap(),
                    group_shrink(&b, &p, 0.5, 1.0, WeightMode::Sqrt).unwrap(),
                ),
            ];
            for (x, y) in pairs {
                assert!(frobenius_norm(&(&x - &y)) <= d + 1e-12);
            }
        }
    }
}
