//! Modified-capital context and single-layer impact matrices.
//!
//! The default condition for an institution i failing once the banks in
//! B_q have failed is Σ_{j∈B_q} EAD_ij / C_i > p_i. Rescaling own funds
//! to C_i^modified = α_i·C_i with α_i = p_i/p_min turns every individual
//! threshold p_i into the common threshold p_min, which is what the
//! contagion recursion and the spectral measures are written against.
//!
//! Four impact scenarios are built here:
//! - EAD / NAC (derivatives): s_ij = X_ji / C_j^modified, both directions
//!   may be positive;
//! - FI / SF (gross markets): s_ij = max(0, G_ji − G_ij) / C_j, at most
//!   one direction positive per pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::portfolio::{ExposureBasis, MarketLayer, Portfolio};

/// Impact scenario of a single-layer matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Ead,
    Nac,
    Fi,
    Sf,
}

impl Scenario {
    pub fn layer(self) -> MarketLayer {
        match self {
            Scenario::Ead | Scenario::Nac => MarketLayer::Derivatives,
            Scenario::Fi => MarketLayer::FixedIncome,
            Scenario::Sf => MarketLayer::SecuritiesFinancing,
        }
    }

    pub fn basis(self) -> ExposureBasis {
        match self {
            Scenario::Ead => ExposureBasis::Ead,
            Scenario::Nac => ExposureBasis::Nac,
            Scenario::Fi => ExposureBasis::MtmGross,
            Scenario::Sf => ExposureBasis::NotionalGross,
        }
    }
}

impl std::fmt::Display for Scenario {
    fmt_impl!();
}

macro_rules! noop {
    () => {};
}

/// Per-institution modified capital over a member subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedCapital {
    p_min: f64,
    members: Vec<usize>,
    /// Parallel to `members`: (p_i, alpha_i, C_i^modified).
    entries: Vec<ModifiedCapitalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedCapitalEntry {
    pub usable_ratio: f64,
    pub alpha: f64,
    pub modified_funds: f64,
}

impl ModifiedCapital {
    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }

    pub fn entry(&self, idx: usize) -> Option<&ModifiedCapitalEntry> {
        self.members.binary_search(&idx).ok().map(|pos| &self.entries[pos])
    }

    pub fn modified_funds(&self, idx: usize) -> Option<f64> {
        self.entry(idx).map(|e| e.modified_funds)
    }

    pub fn alpha(&self, idx: usize) -> Option<f64> {
        self.entry(idx).map(|e| e.alpha)
    }
}

/// p_min over `members`, α_i = p_i/p_min and C_i^modified = α_i·C_i for
/// each member. Institutions outside `members` get no entry.
pub fn compute_modified_capital(portfolio: &Portfolio, members: &[usize]) -> Result<ModifiedCapital> {
    if members.is_empty() {
        return Err(Error::InvalidInput("modified capital needs a non-empty member set".into()));
    }
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&i| i >= portfolio.n()) {
        return Err(Error::InvalidInput(format!("member index {bad} out of range")));
    }
    let ratios: Vec<f64> = sorted.iter().map(|&i| portfolio.institution(i).usable_ratio()).collect();
    let p_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let entries = sorted
        .iter()
        .zip(&ratios)
        .map(|(&i, &p)| {
            let alpha = p / p_min;
            ModifiedCapitalEntry {
                usable_ratio: p,
                alpha,
                modified_funds: alpha * portfolio.institution(i).own_funds.to_f64(),
            }
        })
        .collect();
    Ok(ModifiedCapital { p_min, members: sorted, entries })
}

/// Which own-funds figure sits in an impact denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapitalBasis {
    Raw,
    Modified,
}

/// Non-negative zero-diagonal impact matrix for one scenario, together
/// with the capital context its denominators were taken from and the map
/// from matrix positions back to portfolio indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerImpactMatrix {
    pub scenario: Scenario,
    pub basis: CapitalBasis,
    matrix: Matrix,
    index_map: Vec<usize>,
    /// p_min backing the modified denominators; `None` for raw capital.
    p_min: Option<f64>,
}

impl LayerImpactMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Portfolio index of matrix position `pos`.
    pub fn portfolio_index(&self, pos: usize) -> usize {
        self.index_map[pos]
    }

    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    pub fn p_min(&self) -> Option<f64> {
        self.p_min
    }

    /// Impact of `i` on `j` (matrix positions).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub(crate) fn from_parts(
        scenario: Scenario,
        basis: CapitalBasis,
        matrix: Matrix,
        index_map: Vec<usize>,
        p_min: Option<f64>,
    ) -> LayerImpactMatrix {
        debug_assert_eq!(matrix.rows(), index_map.len());
        LayerImpactMatrix { scenario, basis, matrix, index_map, p_min }
    }

    /// Same entries restricted to the positions in `selection`.
    pub(crate) fn restricted(&self, selection: &[usize]) -> LayerImpactMatrix {
        LayerImpactMatrix {
            scenario: self.scenario,
            basis: self.basis,
            matrix: self.matrix.select(selection),
            index_map: selection.iter().map(|&pos| self.index_map[pos]).collect(),
            p_min: self.p_min,
        }
    }

    /// Re-express modified-capital denominators against a new p_min.
    /// Since α_j = p_j/p_min, every entry picks up the same factor
    /// p_min_new/p_min_old; this equals rebuilding each denominator from
    /// scratch with the new context.
    pub fn rebase_modified_capital(&self, target: &ModifiedCapital) -> Result<LayerImpactMatrix> {
        if self.basis != CapitalBasis::Modified {
            return Err(Error::InvalidInput(
                "rebase applies to modified-capital matrices only".into(),
            ));
        }
        let old = self.p_min.expect("modified matrices carry p_min");
        let factor = target.p_min() / old;
        Ok(LayerImpactMatrix {
            scenario: self.scenario,
            basis: self.basis,
            matrix: self.matrix.scale(factor),
            index_map: self.index_map.clone(),
            p_min: Some(target.p_min()),
        })
    }
}

/// Derivatives impact under the EAD or NAC basis: s_ij = X_ji / C_j^modified.
pub fn build_derivatives_impact(
    portfolio: &Portfolio,
    modcap: &ModifiedCapital,
    basis: ExposureBasis,
) -> Result<LayerImpactMatrix> {
    let scenario = match basis {
        ExposureBasis::Ead => Scenario::Ead,
        ExposureBasis::Nac => Scenario::Nac,
        other => {
            return Err(Error::InvalidInput(format!(
                "derivatives impact takes EAD or NAC, not {other}"
            )))
        }
    };
    let table = portfolio.exposures(MarketLayer::Derivatives, basis);
    let n = portfolio.n();
    let mut matrix = Matrix::zeros(n, n);
    for (j, i, amount) in table.iter() {
        if !amount.is_positive() {
            continue;
        }
        let denom = modcap.modified_funds(j).ok_or_else(|| {
            Error::InconsistentInputs(format!(
                "institution {:?} reports exposures but has no capital context",
                portfolio.institution(j).id
            ))
        })?;
        matrix.set(i, j, amount.to_f64() / denom);
    }
    Ok(LayerImpactMatrix::from_parts(
        scenario,
        CapitalBasis::Modified,
        matrix,
        (0..n).collect(),
        Some(modcap.p_min()),
    ))
}

/// FI/SF impact from bilateral netted gross positions:
/// s_ij = max(0, G_ji − G_ij) / C_j with raw or modified own funds.
pub fn build_netted_gross_impact(
    portfolio: &Portfolio,
    layer: MarketLayer,
    modcap: Option<&ModifiedCapital>,
) -> Result<LayerImpactMatrix> {
    let (scenario, basis) = match layer {
        MarketLayer::FixedIncome => (Scenario::Fi, ExposureBasis::MtmGross),
        MarketLayer::SecuritiesFinancing => (Scenario::Sf, ExposureBasis::NotionalGross),
        MarketLayer::Derivatives => {
            return Err(Error::InvalidInput(
                "netted gross impact applies to the FI and SF layers".into(),
            ))
        }
    };
    let table = portfolio.exposures(layer, basis);
    let n = portfolio.n();
    let capital_of = |idx: usize| -> Result<f64> {
        match modcap {
            None => Ok(portfolio.institution(idx).own_funds.to_f64()),
            Some(ctx) => ctx.modified_funds(idx).ok_or_else(|| {
                Error::InconsistentInputs(format!(
                    "institution {:?} reports exposures but has no capital context",
                    portfolio.institution(idx).id
                ))
            }),
        }
    };
    let mut matrix = Matrix::zeros(n, n);
    for (j, i, amount) in table.iter() {
        if !amount.is_positive() {
            continue;
        }
        let net = amount - table.amount(i, j);
        if net.is_positive() {
            matrix.set(i, j, net.to_f64() / capital_of(j)?);
        }
    }
    Ok(LayerImpactMatrix::from_parts(
        scenario,
        if modcap.is_some() { CapitalBasis::Modified } else { CapitalBasis::Raw },
        matrix,
        (0..n).collect(),
        modcap.map(|c| c.p_min()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{InstitutionRecord, RawExposureRow, RawExposureTable};
    use crate::money::Money;
    use std::path::PathBuf;

    pub(crate) fn portfolio_from_specs(
        capitals: &[(&str, f64, f64)],
        tables: &[(MarketLayer, ExposureBasis, &[(&str, &str, f64)])],
    ) -> Portfolio {
        let institutions = capitals
            .iter()
            .map(|&(id, c, mc)| InstitutionRecord {
                id: id.to_string(),
                own_funds: Money::from_f64_rounded(c, 2),
                min_capital: Money::from_f64_rounded(mc, 2),
            })
            .collect();
        let raw = tables
            .iter()
            .map(|&(layer, basis, rows)| RawExposureTable {
                layer,
                basis,
                file: PathBuf::from("test"),
                rows: rows
                    .iter()
                    .enumerate()
                    .map(|(k, &(j, i, a))| RawExposureRow {
                        line: k as u64 + 2,
                        reporter: j.to_string(),
                        counterparty: i.to_string(),
                        amount: Money::from_f64_rounded(a, 2),
                    })
                    .collect(),
            })
            .collect();
        Portfolio::from_parts(institutions, raw, "test".into(), 2).unwrap()
    }

    #[test]
    fn modified_capital_formula() {
        let p = portfolio_from_specs(&[("A", 100.0, 50.0), ("B", 200.0, 160.0)], &[]);
        let mc = compute_modified_capital(&p, &[0, 1]).unwrap();
        assert!((mc.p_min() - 0.2).abs() < 1e-15);
        assert!((mc.alpha(0).unwrap() - 2.5).abs() < 1e-12);
        assert!((mc.alpha(1).unwrap() - 1.0).abs() < 1e-12);
        assert!((mc.modified_funds(0).unwrap() - 250.0).abs() < 1e-9);
        assert!((mc.modified_funds(1).unwrap() - 200.0).abs() < 1e-9);
        // A_i / C_i^modified = p_min for every member
        for &i in mc.members() {
            let a = p.institution(i).available_funds().to_f64();
            let ratio = a / mc.modified_funds(i).unwrap();
            assert!((ratio - mc.p_min()).abs() / mc.p_min() < 1e-12);
        }
    }

    #[test]
    fn identical_ratios_leave_capital_unchanged() {
        let p = portfolio_from_specs(&[("A", 100.0, 60.0), ("B", 250.0, 150.0)], &[]);
        let mc = compute_modified_capital(&p, &[0, 1]).unwrap();
        assert!((mc.alpha(0).unwrap() - 1.0).abs() < 1e-12);
        assert!((mc.alpha(1).unwrap() - 1.0).abs() < 1e-12);
        assert!((mc.modified_funds(0).unwrap() - 100.0).abs() < 1e-9);
        assert!((mc.modified_funds(1).unwrap() - 250.0).abs() < 1e-9);
    }

    #[test]
    fn empty_member_set_is_an_error() {
        let p = portfolio_from_specs(&[("A", 100.0, 50.0)], &[]);
        assert!(compute_modified_capital(&p, &[]).is_err());
    }

    #[test]
    fn derivatives_impact_direct_formula() {
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0)],
            &[(MarketLayer::Derivatives, ExposureBasis::Ead, &[("A", "B", 10.0)])],
        );
        let mc = compute_modified_capital(&p, &[0, 1]).unwrap();
        let s = build_derivatives_impact(&p, &mc, ExposureBasis::Ead).unwrap();
        // C_A^modified = 250, EAD_AB = 10 -> impact of B on A = 0.04
        assert!((s.entry(1, 0) - 10.0 / 250.0).abs() < 1e-15);
        // unreported direction stays zero
        assert_eq!(s.entry(0, 1), 0.0);
    }

    #[test]
    fn derivatives_impact_three_bank_oracle() {
        let rows: &[(&str, &str, f64)] =
            &[("A", "B", 10.0), ("A", "C", 4.0), ("B", "A", 6.0), ("C", "B", 9.0), ("B", "C", 2.5)];
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0), ("C", 150.0, 30.0)],
            &[(MarketLayer::Derivatives, ExposureBasis::Ead, rows)],
        );
        let mc = compute_modified_capital(&p, &[0, 1, 2]).unwrap();
        let s = build_derivatives_impact(&p, &mc, ExposureBasis::Ead).unwrap();
        // brute-force oracle over all ordered pairs
        let idx = |id: &str| p.index_of(id).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut expected = 0.0;
                for &(rj, ri, a) in rows {
                    if idx(rj) == j && idx(ri) == i {
                        expected = a / mc.modified_funds(j).unwrap();
                    }
                }
                assert!(
                    (s.entry(i, j) - expected).abs() < 1e-15,
                    "entry ({i},{j}) = {} expected {expected}",
                    s.entry(i, j)
                );
            }
        }
    }

    #[test]
    fn missing_capital_context_for_reporter_is_an_error() {
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0)],
            &[(MarketLayer::Derivatives, ExposureBasis::Ead, &[("A", "B", 10.0)])],
        );
        let mc = compute_modified_capital(&p, &[1]).unwrap();
        let err = build_derivatives_impact(&p, &mc, ExposureBasis::Ead).unwrap_err();
        assert!(matches!(err, Error::InconsistentInputs(_)));
    }

    #[test]
    fn netted_gross_direct_formula_and_tie() {
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0), ("C", 150.0, 30.0)],
            &[(
                MarketLayer::FixedIncome,
                ExposureBasis::MtmGross,
                &[("A", "B", 30.0), ("B", "A", 10.0), ("A", "C", 7.0), ("C", "A", 7.0)],
            )],
        );
        let s = build_netted_gross_impact(&p, MarketLayer::FixedIncome, None).unwrap();
        // A reports 30 against B, B reports 10 against A: net 20 hits A's raw funds
        assert!((s.entry(1, 0) - 20.0 / 100.0).abs() < 1e-15);
        assert_eq!(s.entry(0, 1), 0.0);
        // equal gross positions cancel in both directions
        assert_eq!(s.entry(2, 0), 0.0);
        assert_eq!(s.entry(0, 2), 0.0);
    }

    #[test]
    fn netted_gross_four_bank_oracle_and_antisymmetry() {
        let rows: &[(&str, &str, f64)] = &[
            ("A", "B", 30.0),
            ("B", "A", 10.0),
            ("C", "D", 5.0),
            ("D", "C", 25.0),
            ("A", "C", 12.0),
            ("B", "D", 8.0),
        ];
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0), ("C", 150.0, 30.0), ("D", 120.0, 40.0)],
            &[(MarketLayer::SecuritiesFinancing, ExposureBasis::NotionalGross, rows)],
        );
        let s = build_netted_gross_impact(&p, MarketLayer::SecuritiesFinancing, None).unwrap();
        let table = p.exposures(MarketLayer::SecuritiesFinancing, ExposureBasis::NotionalGross);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    assert_eq!(s.entry(i, j), 0.0);
                    continue;
                }
                let net = table.amount(j, i).to_f64() - table.amount(i, j).to_f64();
                let expected =
                    if net > 0.0 { net / p.institution(j).own_funds.to_f64() } else { 0.0 };
                assert!((s.entry(i, j) - expected).abs() < 1e-15);
                // at most one direction positive
                assert!(s.entry(i, j) * s.entry(j, i) == 0.0);
            }
        }
    }

    #[test]
    fn rebase_matches_from_scratch_rebuild() {
        let rows: &[(&str, &str, f64)] = &[("A", "B", 10.0), ("B", "C", 6.0), ("C", "A", 9.0)];
        let p = portfolio_from_specs(
            &[("A", 100.0, 50.0), ("B", 200.0, 160.0), ("C", 150.0, 30.0)],
            &[(MarketLayer::Derivatives, ExposureBasis::Ead, rows)],
        );
        let mc_all = compute_modified_capital(&p, &[0, 1, 2]).unwrap();
        let full = build_derivatives_impact(&p, &mc_all, ExposureBasis::Ead).unwrap();

        let core = vec![0usize, 2];
        let mc_core = compute_modified_capital(&p, &core).unwrap();
        let rebased = full.restricted(&core).rebase_modified_capital(&mc_core).unwrap();

        // oracle: recompute each entry directly against the core context
        let table = p.exposures(MarketLayer::Derivatives, ExposureBasis::Ead);
        for (a, &i) in core.iter().enumerate() {
            for (b, &j) in core.iter().enumerate() {
                let expected = if i == j {
                    0.0
                } else {
                    table.amount(j, i).to_f64() / mc_core.modified_funds(j).unwrap_or(f64::NAN)
                };
                let got = rebased.entry(a, b);
                let tol = 1e-12 * expected.abs().max(1.0);
                assert!((got - expected).abs() < tol, "({a},{b}): {got} vs {expected}");
            }
        }
    }
}
