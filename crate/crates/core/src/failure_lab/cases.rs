//! Constructors for the lab's adversarial `(F, Z*)` instances.
//!
//! Each constructor builds the instance in the frequency domain, maps it to
//! the vertex domain through the case basis (the identity unless lifted), and
//! attaches the closed-form floors that apply to it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optimize::{grid_floor, GridPos, Ties};
use super::LabCase;
use crate::data_io::gnm_graph;
use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::paradigms::{min_error_p1, min_error_p3, Paradigm, RANK_REL_TOL};
use crate::spectral::{gft, igft, numerical_rank, EigenBasis};

/// Paradigms every case is optimized over.
const LEGACY: [Paradigm; 5] = [
    Paradigm::P1,
    Paradigm::P2,
    Paradigm::P3,
    Paradigm::P2P2,
    Paradigm::Combined,
];

fn build(
    name: &str,
    fhat: DenseMat,
    zhat: DenseMat,
    expected_flags: Vec<Paradigm>,
    ties: Option<(Paradigm, Ties)>,
    seed: u64,
) -> Result<LabCase> {
    let n = fhat.rows();
    let mut optimize = LEGACY.to_vec();
    let (ties, tied) = match ties {
        Some((p, t)) => {
            optimize.push(p);
            (Some(t), Some(p))
        }
        None => (None, None),
    };
    let mut case = LabCase {
        name: name.to_string(),
        f: fhat.clone(),
        z_star: zhat,
        basis: EigenBasis::identity(n),
        expected_flags,
        analytic_floor: BTreeMap::new(),
        optimize,
        ties,
        tied,
        seed,
    };
    case.attach_floors()?;
    Ok(case)
}

impl LabCase {
    /// Recomputes the closed-form floors from the current frequency-domain
    /// instance.
    pub(super) fn attach_floors(&mut self) -> Result<()> {
        let fhat = gft(&self.basis, &self.f)?;
        let zhat = gft(&self.basis, &self.z_star)?;
        let mut floors = BTreeMap::new();
        floors.insert(Paradigm::P1, min_error_p1(&fhat, &zhat));
        floors.insert(Paradigm::P3, min_error_p3(&fhat, &zhat));
        if let (Some(p), Some(t)) = (self.tied, &self.ties) {
            floors.insert(p, grid_floor(&fhat, &zhat, t)?);
        }
        self.analytic_floor = floors;
        Ok(())
    }

    /// The same case with `Z*` multiplied by `s`.
    pub fn with_target_scale(&self, s: f64) -> Result<LabCase> {
        let mut out = self.clone();
        out.name = format!("{}_x{s}", self.name);
        out.z_star = self.z_star.scale(s);
        if s == 0.0 {
            out.expected_flags.clear();
        }
        out.attach_floors()?;
        Ok(out)
    }

    /// The same frequency-domain instance expressed in the eigenbasis of a
    /// random graph on `N` nodes.
    pub fn lifted(&self, graph_seed: u64) -> Result<LabCase> {
        let n = self.f.rows();
        if n < 2 {
            return Err(Error::InvalidInput("lifting needs at least two nodes".into()));
        }
        let max_edges = n * (n - 1) / 2;
        let graph = gnm_graph(n, (2 * n).min(max_edges), graph_seed)?;
        let basis = EigenBasis::of_graph(&graph)?;
        let fhat = gft(&self.basis, &self.f)?;
        let zhat = gft(&self.basis, &self.z_star)?;
        let mut out = self.clone();
        out.name = format!("{}_lifted", self.name);
        out.f = igft(&basis, &fhat)?;
        out.z_star = igft(&basis, &zhat)?;
        out.basis = basis;
        out.attach_floors()?;
        Ok(out)
    }
}

fn nonzero_int(rng: &mut ChaCha8Rng, max: i64) -> f64 {
    let v = rng.gen_range(1..=max) as f64;
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn rank(m: &DenseMat) -> Result<usize> {
    numerical_rank(m, RANK_REL_TOL)
}

/// `F̂ = I₂`, `Ẑ*` the channel swap. P1 and P3 cannot move energy across
/// channels, so both floors are `√2`.
pub fn case_swap() -> Result<LabCase> {
    let fhat = DenseMat::identity(2);
    let zhat = DenseMat::from_rows(&[[0.0, 1.0], [1.0, 0.0]])?;
    build(
        "zero_frequency_swap",
        fhat,
        zhat,
        vec![Paradigm::P1, Paradigm::P3],
        None,
        0,
    )
}

/// Integer `F̂` with exactly one zero per row and a nonzero integer target
/// everywhere. Samples are redrawn until `rank F̂ = rank Ẑ*`, so only the
/// support flags fire.
pub fn case_zero_frequency(n: usize, c: usize, seed: u64) -> Result<LabCase> {
    if c < 2 || n == 0 {
        return Err(Error::InvalidInput(format!(
            "zero-frequency case needs n >= 1 and c >= 2, got n={n}, c={c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let mut fhat = DenseMat::zeros(n, c);
        let mut zhat = DenseMat::zeros(n, c);
        for row in 0..n {
            let hole = rng.gen_range(0..c);
            for col in 0..c {
                if col != hole {
                    fhat.set(row, col, nonzero_int(&mut rng, 3));
                }
                zhat.set(row, col, nonzero_int(&mut rng, 3));
            }
        }
        if rank(&fhat)? == rank(&zhat)? {
            return build(
                &format!("zero_frequency_n{n}_c{c}"),
                fhat,
                zhat,
                vec![Paradigm::P1, Paradigm::P3],
                None,
                seed,
            );
        }
    }
    Err(Error::InvalidInput(format!(
        "no equal-rank zero-frequency instance found for n={n}, c={c}"
    )))
}

/// Feasible control: full-support `F̂` and `Ẑ* = diag(g₀) F̂`.
pub fn case_zero_frequency_control(n: usize, c: usize, seed: u64) -> Result<LabCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fhat = DenseMat::from_fn(n, c, |_, _| nonzero_int(&mut rng, 3));
    let g0: Vec<f64> = (0..n).map(|_| nonzero_int(&mut rng, 4)).collect();
    let zhat = fhat.scale_rows(&g0)?;
    build(
        &format!("zero_frequency_control_n{n}_c{c}"),
        fhat,
        zhat,
        Vec::new(),
        None,
        seed,
    )
}

/// Random magnitude in `[0.5, 1.5]`, negated at random when `signed`.
fn bounded(rng: &mut ChaCha8Rng, signed: bool) -> f64 {
    let v = rng.gen_range(0.5..1.5);
    if signed && rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// Sum of `r` random outer products. Unsigned factors keep every entry at
/// least `r / 4`, so no entry needs an extreme per-entry filter value.
fn outer_sum(n: usize, c: usize, r: usize, signed: bool, rng: &mut ChaCha8Rng) -> DenseMat {
    let mut m = DenseMat::zeros(n, c);
    for _ in 0..r {
        let a: Vec<f64> = (0..n).map(|_| bounded(rng, signed)).collect();
        let b: Vec<f64> = (0..c).map(|_| bounded(rng, signed)).collect();
        for i in 0..n {
            for j in 0..c {
                m[(i, j)] += a[i] * b[j];
            }
        }
    }
    m
}

/// Random `F̂` of rank `rank_f` and `Ẑ*` of rank `rank_z`, both sums of
/// outer products. Flags P1 and P2 when `rank_z > rank_f` and P2+P2 when
/// `rank_z > 2 rank_f`.
pub fn case_rank_deficit(n: usize, c: usize, rank_f: usize, rank_z: usize, seed: u64) -> Result<LabCase> {
    if rank_f == 0 || rank_f > n.min(c) || rank_z > n.min(c) {
        return Err(Error::InvalidInput(format!(
            "ranks ({rank_f}, {rank_z}) not attainable for a {n}x{c} instance"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fhat = outer_sum(n, c, rank_f, false, &mut rng);
    let zhat = outer_sum(n, c, rank_z, true, &mut rng);
    let mut expected = Vec::new();
    if rank_z > rank_f {
        expected.extend([Paradigm::P1, Paradigm::P2]);
    }
    if rank_z > 2 * rank_f {
        expected.push(Paradigm::P2P2);
    }
    let name = format!("rank_deficit_n{n}_c{c}_f{rank_f}_z{rank_z}");
    build(&name, fhat, zhat, expected, None, seed)
}

/// Rows 0 and 1 share a zero in column 2 while the target needs energy
/// there. With `mismatched_ratios` the two rows have different
/// column-1/column-0 ratios; otherwise they are proportional.
pub fn case_combined(mismatched_ratios: bool) -> Result<LabCase> {
    let (r1, name) = if mismatched_ratios {
        ([1.0, 3.0, 0.0], "combined_ratio_mismatch")
    } else {
        ([2.0, 4.0, 0.0], "combined_ratio_equal")
    };
    let fhat = DenseMat::from_rows(&[[1.0, 2.0, 0.0], r1, [2.0, 1.0, 3.0], [1.0, -1.0, 2.0]])?;
    let zhat = DenseMat::from_rows(&[[1.0, 0.0, 2.0], [0.0, 1.0, -1.0], [1.0, 2.0, 1.0], [2.0, 0.0, 1.0]])?;
    // Column-2 holes in rows 0 and 1 carry target energy; both ranks are 3.
    let expected = vec![Paradigm::P1, Paradigm::P3];
    build(name, fhat, zhat, expected, None, 3)
}

/// Row 0 of `F̂` is `[0, 0, 2]` and the filter `g_(2,0)[0]` is pinned to
/// `0`, so output `(0, 0)` is stuck at zero against a target of `5`.
pub fn case_tied_constant() -> Result<LabCase> {
    let fhat = DenseMat::from_rows(&[[0.0, 0.0, 2.0], [1.0, 2.0, 1.0], [2.0, -1.0, 1.0]])?;
    let zhat = DenseMat::from_rows(&[[5.0, 1.0, -1.0], [1.0, 0.0, 2.0], [3.0, 1.0, 1.0]])?;
    let ties = Ties {
        constants: vec![(
            GridPos {
                n: 0,
                input: 2,
                output: 0,
            },
            0.0,
        )],
        shared: Vec::new(),
    };
    // Holes at (0, 0) and (0, 1) carry target energy; both ranks are 3.
    let expected = vec![Paradigm::P1, Paradigm::P3];
    build(
        "tied_constant",
        fhat,
        zhat,
        expected,
        Some((Paradigm::TiedConstant, ties)),
        4,
    )
}

/// Rows 0 and 1 of `F̂` are both `e₀` with targets `3s` and `4s` in output
/// 0, and `g_(0,0)` is shared between frequencies 0 and 1.
pub fn case_tied_shared(scale: f64) -> Result<LabCase> {
    let fhat = DenseMat::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 2.0]])?;
    let zhat = DenseMat::from_rows(&[[3.0, 1.0], [4.0, -1.0], [2.0, 5.0]])?.scale(scale);
    let ties = Ties {
        constants: Vec::new(),
        shared: vec![vec![
            GridPos {
                n: 0,
                input: 0,
                output: 0,
            },
            GridPos {
                n: 1,
                input: 0,
                output: 0,
            },
        ]],
    };
    // Column-1 holes in rows 0 and 1 carry target energy; both ranks are 2.
    let expected = vec![Paradigm::P1, Paradigm::P3];
    build(
        "tied_shared",
        fhat,
        zhat,
        expected,
        Some((Paradigm::TiedShared, ties)),
        5,
    )
}

/// All case families with their default parameters.
pub fn standard_suite() -> Result<Vec<LabCase>> {
    Ok(vec![
        case_swap()?,
        case_zero_frequency(6, 3, 11)?,
        case_zero_frequency_control(6, 3, 12)?,
        case_rank_deficit(6, 4, 1, 3, 21)?,
        case_rank_deficit(6, 4, 2, 3, 22)?,
        case_rank_deficit(6, 4, 3, 2, 23)?,
        case_combined(true)?,
        case_combined(false)?,
        case_tied_constant()?,
        case_tied_shared(1.0)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_floors_are_root_two() {
        let case = case_swap().unwrap();
        let r2 = 2f64.sqrt();
        assert!((case.analytic_floor[&Paradigm::P1] - r2).abs() < 1e-12);
        assert!((case.analytic_floor[&Paradigm::P3] - r2).abs() < 1e-12);
        let doubled = case.with_target_scale(2.0).unwrap();
        assert!((doubled.analytic_floor[&Paradigm::P1] - 2.0 * r2).abs() < 1e-12);
    }

    #[test]
    fn rank_cases_have_requested_ranks() {
        let case = case_rank_deficit(6, 4, 1, 3, 21).unwrap();
        assert_eq!(rank(&case.f).unwrap(), 1);
        assert_eq!(rank(&case.z_star).unwrap(), 3);
        assert_eq!(case.expected_flags, vec![Paradigm::P1, Paradigm::P2, Paradigm::P2P2]);
    }

    #[test]
    fn tied_floors_by_hand() {
        let c = case_tied_constant().unwrap();
        assert!((c.analytic_floor[&Paradigm::TiedConstant] - 5.0).abs() < 1e-10);
        let s = case_tied_shared(1.0).unwrap();
        // min over g of (3 - g)² + (4 - g)² is reached at g = 3.5.
        let expect = (0.5f64.powi(2) * 2.0).sqrt();
        assert!((s.analytic_floor[&Paradigm::TiedShared] - expect).abs() < 1e-10);
    }

    #[test]
    fn zero_frequency_rows_have_one_hole() {
        let case = case_zero_frequency(6, 3, 11).unwrap();
        for row in case.f.to_rows() {
            assert_eq!(row.iter().filter(|v| **v == 0.0).count(), 1);
        }
    }
}
