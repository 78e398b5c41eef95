//! Classical Ising problem instances and their degenerate ground states.
//!
//! The cost function is `H0 = -Σ_{i<j} J_ij σ_i σ_j - Σ_i h_i σ_i` with each
//! interacting pair stored once. Spin configurations are packed into an
//! integer: bit `i` clear means `σ_i = +1` (up), bit `i` set means `σ_i = -1`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest `N` accepted by exhaustive ground-state enumeration.
pub const MAX_ENUMERATION_SPINS: usize = 24;

/// Energies closer than this to the minimum count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// A spin configuration of `N` classical spins, bit-encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        if spins.len() > 63 {
            return Err(Error::Capacity { what: "spins", requested: spins.len(), limit: 63 });
        }
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                other => return Err(Error::Configuration(format!("spin value {other} is not ±1"))),
            }
        }
        Ok(SpinConfig(bits))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// `σ_i ∈ {+1, -1}`.
    #[inline]
    pub fn spin(self, i: usize) -> i8 {
        1 - 2 * ((self.0 >> i) & 1) as i8
    }

    pub fn to_spins(self, n_spins: usize) -> Vec<i8> {
        (0..n_spins).map(|i| self.spin(i)).collect()
    }

    pub fn flipped(self, i: usize) -> Self {
        SpinConfig(self.0 ^ (1 << i))
    }

    pub fn hamming_distance(self, other: SpinConfig) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    pub fn is_valid_for(self, n_spins: usize) -> bool {
        n_spins >= 64 || self.0 >> n_spins == 0
    }

    /// Arrow rendering, spin 1 first: `↑↓`.
    pub fn arrows(self, n_spins: usize) -> String {
        (0..n_spins).map(|i| if self.spin(i) > 0 { '↑' } else { '↓' }).collect()
    }
}

/// One stored pair interaction `J_ij σ_i σ_j` with `i < j` (0-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling<T> {
    pub i: usize,
    pub j: usize,
    pub value: T,
}

/// An Ising cost function over `n_spins` spins in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemIsing<T> {
    n_spins: usize,
    couplings: Vec<Coupling<T>>,
    fields: Vec<(usize, T)>,
    // Adjacency for local-field evaluation: neighbors[i] = [(j, J_ij)].
    neighbors: Vec<Vec<(usize, T)>>,
    field_by_site: Vec<T>,
}

impl<T: Real> ProblemIsing<T> {
    /// Builds a problem from 0-based pair and field entries.
    ///
    /// Entries for `(i, j)` and `(j, i)` are summed into a single stored pair,
    /// as are repeated field entries for the same site.
    pub fn new<C, F>(n_spins: usize, couplings: C, fields: F) -> Result<Self>
    where
        C: IntoIterator<Item = (usize, usize, T)>,
        F: IntoIterator<Item = (usize, T)>,
    {
        if n_spins == 0 {
            return Err(Error::InvalidModel("n_spins must be positive".into()));
        }
        if n_spins > 63 {
            return Err(Error::Capacity { what: "n_spins", requested: n_spins, limit: 63 });
        }
        let check = |idx: usize| {
            if idx >= n_spins {
                Err(Error::Configuration(format!("spin index {idx} out of range for {n_spins} spins")))
            } else {
                Ok(())
            }
        };

        let mut pairs: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (i, j, value) in couplings {
            check(i)?;
            check(j)?;
            if i == j {
                return Err(Error::Configuration(format!("self-coupling on spin {i}")));
            }
            if !value.is_finite() {
                return Err(Error::Configuration(format!("non-finite coupling on ({i}, {j})")));
            }
            let key = (i.min(j), i.max(j));
            let slot = pairs.entry(key).or_insert_with(T::zero);
            *slot = *slot + value;
        }

        let mut field_by_site = vec![T::zero(); n_spins];
        let mut seen = vec![false; n_spins];
        for (i, h) in fields {
            check(i)?;
            if !h.is_finite() {
                return Err(Error::Configuration(format!("non-finite field on spin {i}")));
            }
            field_by_site[i] = field_by_site[i] + h;
            seen[i] = true;
        }

        let couplings: Vec<Coupling<T>> = pairs.into_iter().map(|((i, j), value)| Coupling { i, j, value }).collect();
        let fields: Vec<(usize, T)> = (0..n_spins).filter(|&i| seen[i]).map(|i| (i, field_by_site[i])).collect();

        let mut neighbors = vec![Vec::new(); n_spins];
        for c in &couplings {
            neighbors[c.i].push((c.j, c.value));
            neighbors[c.j].push((c.i, c.value));
        }

        Ok(Self { n_spins, couplings, fields, neighbors, field_by_site })
    }

    /// The ferromagnetic chain `H0 = -Σ σ_i σ_{i+1} - σ_1 + σ_N`, which has
    /// `N + 1` degenerate ground states one spin flip apart.
    pub fn toy_model(n_spins: usize) -> Result<Self> {
        if n_spins < 2 {
            return Err(Error::InvalidModel(format!("toy model needs at least 2 spins, got {n_spins}")));
        }
        let couplings = (0..n_spins - 1).map(|i| (i, i + 1, T::one()));
        let fields = [(0, T::one()), (n_spins - 1, -T::one())];
        Self::new(n_spins, couplings, fields)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn couplings(&self) -> &[Coupling<T>] {
        &self.couplings
    }

    /// Nonzero-entry field list, ascending by site.
    pub fn fields(&self) -> &[(usize, T)] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> T {
        self.field_by_site[i]
    }

    pub fn check_config(&self, config: SpinConfig) -> Result<()> {
        if config.is_valid_for(self.n_spins) {
            Ok(())
        } else {
            Err(Error::Configuration(format!("configuration {:#b} has bits beyond {} spins", config.0, self.n_spins)))
        }
    }

    /// `H0(config)`.
    pub fn classical_energy(&self, config: SpinConfig) -> Result<T> {
        self.check_config(config)?;
        Ok(self.energy_unchecked(config))
    }

    pub(crate) fn energy_unchecked(&self, config: SpinConfig) -> T {
        let spin = |i: usize| if config.spin(i) > 0 { T::one() } else { -T::one() };
        let pair: T = self.couplings.iter().fold(T::zero(), |acc, c| acc + c.value * spin(c.i) * spin(c.j));
        let lin: T = self.fields.iter().fold(T::zero(), |acc, &(i, h)| acc + h * spin(i));
        -pair - lin
    }

    /// Local field `Σ_j J_ij σ_j + h_i` acting on spin `i`.
    ///
    /// Flipping spin `i` changes `H0` by `2 σ_i · local_field(config, i)`.
    pub fn local_field(&self, config: SpinConfig, i: usize) -> T {
        self.neighbors[i].iter().fold(
            self.field_by_site[i],
            |acc, &(j, jv)| {
                if config.spin(j) > 0 {
                    acc + jv
                } else {
                    acc - jv
                }
            },
        )
    }

    /// Exhaustively enumerates `H0` and returns every configuration within
    /// [`DEGENERACY_TOLERANCE`] of the minimum, in ascending bit order.
    pub fn ground_states(&self) -> Result<GroundStateSet<T>> {
        if self.n_spins > MAX_ENUMERATION_SPINS {
            return Err(Error::Capacity {
                what: "n_spins for enumeration",
                requested: self.n_spins,
                limit: MAX_ENUMERATION_SPINS,
            });
        }
        let energies: Vec<T> = (0..1u64 << self.n_spins).map(|b| self.energy_unchecked(SpinConfig(b))).collect();
        let min = energies.iter().copied().fold(T::infinity(), T::min);
        let tol = T::lit(DEGENERACY_TOLERANCE);
        let states =
            energies.iter().enumerate().filter(|(_, &e)| e - min <= tol).map(|(b, _)| SpinConfig(b as u64)).collect();
        Ok(GroundStateSet { n_spins: self.n_spins, energy: min, states })
    }

    /// Parses the JSON problem format (1-based indices).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_problem()
    }

    pub fn to_problem_file(&self) -> ProblemFile {
        ProblemFile {
            n_spins: self.n_spins,
            couplings: self.couplings.iter().map(|c| (c.i + 1, c.j + 1, c.value.to_f64_lossy())).collect(),
            fields: self.fields.iter().map(|&(i, h)| (i + 1, h.to_f64_lossy())).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_problem_file()).expect("problem file serializes")
    }
}

/// `classical_energy` as a free function over an arbitrary problem.
pub fn classical_energy<T: Real>(problem: &ProblemIsing<T>, config: SpinConfig) -> Result<T> {
    problem.classical_energy(config)
}

pub fn build_toy_model<T: Real>(n_spins: usize) -> Result<ProblemIsing<T>> {
    ProblemIsing::toy_model(n_spins)
}

pub fn enumerate_ground_states<T: Real>(problem: &ProblemIsing<T>) -> Result<GroundStateSet<T>> {
    problem.ground_states()
}

/// On-disk problem description. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n_spins: usize,
    #[serde(default)]
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub fields: Vec<(usize, f64)>,
}

impl ProblemFile {
    pub fn into_problem<T: Real>(self) -> Result<ProblemIsing<T>> {
        let to0 = |idx: usize| {
            idx.checked_sub(1).ok_or_else(|| Error::Configuration("problem file indices are 1-based; found 0".into()))
        };
        let couplings =
            self.couplings.iter().map(|&(i, j, v)| Ok((to0(i)?, to0(j)?, T::lit(v)))).collect::<Result<Vec<_>>>()?;
        let fields = self.fields.iter().map(|&(i, h)| Ok((to0(i)?, T::lit(h)))).collect::<Result<Vec<_>>>()?;
        ProblemIsing::new(self.n_spins, couplings, fields)
    }
}

/// All minimum-energy configurations of a problem, ascending by bits.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateSet<T> {
    pub n_spins: usize,
    pub energy: T,
    pub states: Vec<SpinConfig>,
}

impl<T> GroundStateSet<T> {
    pub fn count(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, config: SpinConfig) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }
}

impl<T: fmt::Display> fmt::Display for GroundStateSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ground states at E = {}:", self.count(), self.energy)?;
        for (label, s) in self.states.iter().enumerate() {
            write!(f, " |{label}⟩={}", s.arrows(self.n_spins))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> ProblemIsing<f64> {
        ProblemIsing::toy_model(n).unwrap()
    }

    // Brute-force table for the N=2 toy model, computed independently by
    // enumerating H0 = -σ1σ2 - σ1 + σ2 over all four configurations.
    const TOY2_ENERGIES: [(u64, f64); 4] = [(0b00, -1.0), (0b01, 3.0), (0b10, -1.0), (0b11, -1.0)];

    #[test]
    fn toy_two_energies() {
        let p = toy(2);
        for (bits, e) in TOY2_ENERGIES {
            assert_eq!(p.classical_energy(SpinConfig(bits)).unwrap(), e, "bits {bits:b}");
        }
        // ↑↑ and ↓↑ named explicitly
        assert_eq!(p.classical_energy(SpinConfig::from_spins(&[1, 1]).unwrap()).unwrap(), -1.0);
        assert_eq!(p.classical_energy(SpinConfig::from_spins(&[-1, 1]).unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn empty_problem_has_zero_energy() {
        let p = ProblemIsing::<f64>::new(3, [], []).unwrap();
        for b in 0..8 {
            assert_eq!(p.classical_energy(SpinConfig(b)).unwrap(), 0.0);
        }
    }

    #[test]
    fn out_of_range_config_is_rejected() {
        let p = toy(2);
        assert!(matches!(p.classical_energy(SpinConfig(0b100)), Err(Error::Configuration(_))));
    }

    #[test]
    fn toy_model_structure() {
        let p = toy(2);
        assert_eq!(p.couplings(), &[Coupling { i: 0, j: 1, value: 1.0 }]);
        assert_eq!(p.fields(), &[(0, 1.0), (1, -1.0)]);
        let p3 = toy(3);
        assert_eq!(p3.couplings(), &[Coupling { i: 0, j: 1, value: 1.0 }, Coupling { i: 1, j: 2, value: 1.0 }]);
        assert_eq!(p3.fields(), &[(0, 1.0), (2, -1.0)]);
        assert!(matches!(ProblemIsing::<f64>::toy_model(1), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn toy_ground_states() {
        let gs = toy(2).ground_states().unwrap();
        assert_eq!(gs.energy, -1.0);
        assert_eq!(gs.states, vec![SpinConfig(0b00), SpinConfig(0b10), SpinConfig(0b11)]);
        assert_eq!(gs.count(), 3);

        let gs3 = toy(3).ground_states().unwrap();
        let arrows: Vec<String> = gs3.states.iter().map(|s| s.arrows(3)).collect();
        assert_eq!(arrows, ["↑↑↑", "↑↑↓", "↑↓↓", "↓↓↓"]);
    }

    #[test]
    fn single_spin_ground_state() {
        let p = ProblemIsing::<f64>::new(1, [], [(0, 1.0)]).unwrap();
        let gs = p.ground_states().unwrap();
        assert_eq!(gs.states, vec![SpinConfig(0)]);
    }

    #[test]
    fn toy_ground_states_are_a_hamming_path() {
        for n in 2..=8 {
            let gs = toy(n).ground_states().unwrap();
            assert_eq!(gs.count(), n + 1);
            for w in gs.states.windows(2) {
                assert_eq!(w[0].hamming_distance(w[1]), 1);
            }
        }
    }

    #[test]
    fn flip_and_reverse_symmetry() {
        for n in 2..=6 {
            let p = toy(n);
            let all = (1u64 << n) - 1;
            for b in 0..=all {
                let mut reversed = 0u64;
                for i in 0..n {
                    if (b >> i) & 1 == 1 {
                        reversed |= 1 << (n - 1 - i);
                    }
                }
                let image = SpinConfig(reversed ^ all);
                assert_eq!(p.classical_energy(SpinConfig(b)).unwrap(), p.classical_energy(image).unwrap());
            }
        }
    }

    #[test]
    fn enumeration_guard() {
        let p = ProblemIsing::<f64>::new(25, [], []).unwrap();
        assert!(matches!(p.ground_states(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn double_sum_entries_merge() {
        let p = ProblemIsing::<f64>::new(3, [(0, 1, 0.5), (1, 0, 0.5), (2, 1, -1.0)], [(2, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(p.couplings(), &[Coupling { i: 0, j: 1, value: 1.0 }, Coupling { i: 1, j: 2, value: -1.0 }]);
        assert_eq!(p.fields(), &[(2, 2.0)]);
        assert!(ProblemIsing::<f64>::new(2, [(0, 0, 1.0)], []).is_err());
        assert!(ProblemIsing::<f64>::new(2, [(0, 2, 1.0)], []).is_err());
        assert!(ProblemIsing::<f64>::new(2, [], [(5, 1.0)]).is_err());
    }

    #[test]
    fn local_field_matches_energy_difference() {
        let p = ProblemIsing::<f64>::new(4, [(0, 1, 1.5), (1, 2, -0.5), (0, 3, 2.0)], [(1, 0.25)]).unwrap();
        for b in 0..16u64 {
            let c = SpinConfig(b);
            for i in 0..4 {
                let de = p.classical_energy(c.flipped(i)).unwrap() - p.classical_energy(c).unwrap();
                let local = 2.0 * c.spin(i) as f64 * p.local_field(c, i);
                assert!((de - local).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn problem_file_round_trip() {
        let text = r#"{"n_spins": 2, "couplings": [[1, 2, 1.0]], "fields": [[1, 1.0], [2, -1.0]]}"#;
        let p = ProblemIsing::<f64>::from_json_str(text).unwrap();
        assert_eq!(p, toy(2));
        let again = ProblemIsing::<f64>::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(again, p);
        assert!(ProblemIsing::<f64>::from_json_str(r#"{"n_spins": 2, "fields": [[0, 1.0]]}"#).is_err());
    }
}
