//! Domain types, validation, and CSV ingestion for institutions and
//! layered bilateral exposures.
//!
//! A `Portfolio` is immutable after construction: institutions in input
//! file order (that order defines every matrix layout downstream), plus
//! the four directed exposure tables (FI gross MtM, SF gross notional,
//! and the two derivatives bases EAD and NAC) for one reporting period.
//! Institutions with no exposures anywhere are kept; they drop out later
//! at the strongly-connected-component stage.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// The three markets composing the overall structure, in the fixed block
/// order used by every unfolded layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketLayer {
    FixedIncome,
    SecuritiesFinancing,
    Derivatives,
}

pub const LAYER_ORDER: [MarketLayer; 3] =
    [MarketLayer::FixedIncome, MarketLayer::SecuritiesFinancing, MarketLayer::Derivatives];

impl MarketLayer {
    pub fn code(self) -> &'static str {
        match self {
            MarketLayer::FixedIncome => "fi",
            MarketLayer::SecuritiesFinancing => "sf",
            MarketLayer::Derivatives => "d",
        }
    }

    /// Position of this layer in `LAYER_ORDER`.
    pub fn block(self) -> usize {
        match self {
            MarketLayer::FixedIncome => 0,
            MarketLayer::SecuritiesFinancing => 1,
            MarketLayer::Derivatives => 2,
        }
    }

    pub fn accepts(self, basis: ExposureBasis) -> bool {
        matches!(
            (self, basis),
            (MarketLayer::Derivatives, ExposureBasis::Ead)
                | (MarketLayer::Derivatives, ExposureBasis::Nac)
                | (MarketLayer::FixedIncome, ExposureBasis::MtmGross)
                | (MarketLayer::SecuritiesFinancing, ExposureBasis::NotionalGross)
        )
    }
}

impl fmt::Display for MarketLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MarketLayer::FixedIncome => "FI",
            MarketLayer::SecuritiesFinancing => "SF",
            MarketLayer::Derivatives => "D",
        };
        write!(f, "{name}")
    }
}

/// Valuation basis of a reported exposure table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureBasis {
    Ead,
    Nac,
    MtmGross,
    NotionalGross,
}

impl ExposureBasis {
    pub fn code(self) -> &'static str {
        match self {
            ExposureBasis::Ead => "ead",
            ExposureBasis::Nac => "nac",
            ExposureBasis::MtmGross => "mtm_gross",
            ExposureBasis::NotionalGross => "notional_gross",
        }
    }
}

impl fmt::Display for ExposureBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// The four (layer, basis) tables a portfolio carries.
pub const TABLE_KINDS: [(MarketLayer, ExposureBasis); 4] = [
    (MarketLayer::FixedIncome, ExposureBasis::MtmGross),
    (MarketLayer::SecuritiesFinancing, ExposureBasis::NotionalGross),
    (MarketLayer::Derivatives, ExposureBasis::Ead),
    (MarketLayer::Derivatives, ExposureBasis::Nac),
];

/// Capital position of one reporting institution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionRecord {
    pub id: String,
    /// Total own funds C_i (CET1 + AT1 + T2), strictly positive.
    pub own_funds: Money,
    /// Minimum capital requirement MC_i, with 0 <= MC_i < C_i.
    pub min_capital: Money,
}

impl InstitutionRecord {
    /// Available funds A_i = C_i - MC_i.
    pub fn available_funds(&self) -> Money {
        self.own_funds - self.min_capital
    }

    /// p_i = A_i / C_i, the usable fraction of own funds, in (0, 1].
    pub fn usable_ratio(&self) -> f64 {
        self.available_funds().to_f64() / self.own_funds.to_f64()
    }
}

/// Directed bilateral exposure table for one (layer, basis), keyed by
/// (reporter index, counterparty index) in portfolio order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerExposures {
    pub layer: MarketLayer,
    pub basis: ExposureBasis,
    entries: BTreeMap<(usize, usize), Money>,
}

impl LayerExposures {
    pub fn empty(layer: MarketLayer, basis: ExposureBasis) -> LayerExposures {
        LayerExposures { layer, basis, entries: BTreeMap::new() }
    }

    /// Reported amount of `reporter` against `counterparty`; absent rows are
    /// zero exposure.
    pub fn amount(&self, reporter: usize, counterparty: usize) -> Money {
        self.entries.get(&(reporter, counterparty)).copied().unwrap_or(Money::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Money)> + '_ {
        self.entries.iter().map(|(&(j, i), &amount)| (j, i, amount))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn insert(&mut self, reporter: usize, counterparty: usize, amount: Money) {
        self.entries.insert((reporter, counterparty), amount);
    }

    /// Reporter indices that carry at least one positive exposure.
    pub fn reporters(&self) -> impl Iterator<Item = usize> + '_ {
        let mut last = None;
        self.entries.iter().filter_map(move |(&(j, _), &amt)| {
            if amt.is_positive() && last != Some(j) {
                last = Some(j);
                Some(j)
            } else {
                None
            }
        })
    }
}

/// One reporting period: institutions in file order plus the four
/// exposure tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    institutions: Vec<InstitutionRecord>,
    tables: Vec<LayerExposures>,
    period_tag: String,
    decimal_scale: u8,
}

/// Options for `Portfolio::load`.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Maximum fractional digits accepted in amount columns.
    pub decimal_scale: u8,
    pub period_tag: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { decimal_scale: 2, period_tag: String::new() }
    }
}

/// An exposure CSV to ingest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExposureFile {
    pub layer: MarketLayer,
    pub basis: ExposureBasis,
    pub path: PathBuf,
}

fn parse_err(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { file: file.display().to_string(), line, message: message.into() }
}

fn validation_err(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Validation { file: file.display().to_string(), line, message: message.into() }
}

impl Portfolio {
    /// Assemble and validate a portfolio from already-parsed parts.
    /// Exposure rows are (reporter id, counterparty id, amount) with the
    /// originating file/line kept for error context.
    pub fn from_parts(
        institutions: Vec<InstitutionRecord>,
        exposure_rows: Vec<RawExposureTable>,
        period_tag: String,
        decimal_scale: u8,
    ) -> Result<Portfolio> {
        let mut index_by_id: BTreeMap<&str, usize> = BTreeMap::new();
        for (idx, rec) in institutions.iter().enumerate() {
            if index_by_id.insert(&rec.id, idx).is_some() {
                return Err(Error::InvalidInput(format!("duplicate institution id {:?}", rec.id)));
            }
        }

        let mut tables: Vec<LayerExposures> = TABLE_KINDS
            .iter()
            .map(|&(layer, basis)| LayerExposures::empty(layer, basis))
            .collect();

        let mut seen: Vec<(MarketLayer, ExposureBasis)> = Vec::new();
        for raw in exposure_rows {
            if !raw.layer.accepts(raw.basis) {
                return Err(Error::InvalidInput(format!(
                    "layer {} does not accept basis {}",
                    raw.layer, raw.basis
                )));
            }
            if seen.contains(&(raw.layer, raw.basis)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate exposure table for layer {} basis {}",
                    raw.layer, raw.basis
                )));
            }
            seen.push((raw.layer, raw.basis));
            let slot = tables
                .iter_mut()
                .find(|t| t.layer == raw.layer && t.basis == raw.basis)
                .expect("table slot");
            let file = raw.file.as_path();
            for row in raw.rows {
                let j = *index_by_id.get(row.reporter.as_str()).ok_or_else(|| {
                    validation_err(file, row.line, format!("unknown reporter id {:?}", row.reporter))
                })?;
                let i = *index_by_id.get(row.counterparty.as_str()).ok_or_else(|| {
                    validation_err(
                        file,
                        row.line,
                        format!("unknown counterparty id {:?}", row.counterparty),
                    )
                })?;
                if i == j {
                    return Err(validation_err(
                        file,
                        row.line,
                        format!("self-exposure reported by {:?}", row.reporter),
                    ));
                }
                if row.amount.is_negative() {
                    return Err(validation_err(
                        file,
                        row.line,
                        format!("negative amount for {:?} -> {:?}", row.reporter, row.counterparty),
                    ));
                }
                slot.insert(j, i, row.amount);
            }
        }

        Ok(Portfolio { institutions, tables, period_tag, decimal_scale })
    }

    /// Load institutions and exposure CSVs, validating as ingested.
    pub fn load(
        institutions_file: &Path,
        exposure_files: &[ExposureFile],
        options: &LoadOptions,
    ) -> Result<Portfolio> {
        let institutions = read_institutions_csv(institutions_file, options.decimal_scale)?;
        let mut raw_tables = Vec::new();
        for spec in exposure_files {
            raw_tables.push(read_exposures_csv(spec, options.decimal_scale)?);
        }
        Portfolio::from_parts(
            institutions,
            raw_tables,
            options.period_tag.clone(),
            options.decimal_scale,
        )
    }

    pub fn n(&self) -> usize {
        self.institutions.len()
    }

    pub fn institutions(&self) -> &[InstitutionRecord] {
        &self.institutions
    }

    pub fn institution(&self, idx: usize) -> &InstitutionRecord {
        &self.institutions[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.institutions.iter().position(|r| r.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.institutions.iter().map(|r| r.id.as_str()).collect()
    }

    pub fn exposures(&self, layer: MarketLayer, basis: ExposureBasis) -> &LayerExposures {
        self.tables
            .iter()
            .find(|t| t.layer == layer && t.basis == basis)
            .expect("all four table kinds are always present")
    }

    pub fn period_tag(&self) -> &str {
        &self.period_tag
    }

    pub fn decimal_scale(&self) -> u8 {
        self.decimal_scale
    }

    /// Drop every exposure strictly below `threshold`; everything else is
    /// copied unchanged. A zero threshold is the identity.
    pub fn apply_reporting_threshold(&self, threshold: Money) -> Portfolio {
        assert!(!threshold.is_negative(), "reporting threshold must be non-negative");
        let tables = self
            .tables
            .iter()
            .map(|t| {
                let mut kept = LayerExposures::empty(t.layer, t.basis);
                for (j, i, amount) in t.iter() {
                    if amount >= threshold {
                        kept.insert(j, i, amount);
                    }
                }
                kept
            })
            .collect();
        Portfolio {
            institutions: self.institutions.clone(),
            tables,
            period_tag: self.period_tag.clone(),
            decimal_scale: self.decimal_scale,
        }
    }

    /// Write the portfolio back out under the same CSV schemas it is
    /// loaded from. Returns the files written.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let mut written = Vec::new();
        let inst_path = dir.join("institutions.csv");
        {
            let mut out = String::from("id,own_funds,min_capital\n");
            for rec in &self.institutions {
                out.push_str(&format!(
                    "{},{},{}\n",
                    rec.id,
                    rec.own_funds.format(self.decimal_scale),
                    rec.min_capital.format(self.decimal_scale)
                ));
            }
            write_file(&inst_path, &out)?;
        }
        written.push(inst_path);
        for table in &self.tables {
            let path = dir.join(format!("exposures_{}_{}.csv", table.layer.code(), table.basis.code()));
            let mut out = String::from("reporter_id,counterparty_id,amount\n");
            for (j, i, amount) in table.iter() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    self.institutions[j].id,
                    self.institutions[i].id,
                    amount.format(self.decimal_scale)
                ));
            }
            write_file(&path, &out)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parsed but not yet validated exposure table.
#[derive(Debug, Clone)]
pub struct RawExposureTable {
    pub layer: MarketLayer,
    pub basis: ExposureBasis,
    pub file: PathBuf,
    pub rows: Vec<RawExposureRow>,
}

#[derive(Debug, Clone)]
pub struct RawExposureRow {
    pub line: u64,
    pub reporter: String,
    pub counterparty: String,
    pub amount: Money,
}

fn read_institutions_csv(path: &Path, decimal_scale: u8) -> Result<Vec<InstitutionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
        let expected = ["id", "own_funds", "min_capital"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(parse_err(
                path,
                1,
                format!("expected header `id,own_funds,min_capital`, found {headers:?}"),
            ));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 columns, found {}", row.len())));
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty institution id"));
        }
        let own_funds = Money::parse(&row[1], decimal_scale)
            .map_err(|e| parse_err(path, line, format!("own_funds: {e}")))?;
        let min_capital = Money::parse(&row[2], decimal_scale)
            .map_err(|e| parse_err(path, line, format!("min_capital: {e}")))?;
        if !own_funds.is_positive() {
            return Err(validation_err(path, line, format!("institution {id:?}: own_funds must be > 0")));
        }
        if min_capital.is_negative() {
            return Err(validation_err(path, line, format!("institution {id:?}: min_capital must be >= 0")));
        }
        if min_capital >= own_funds {
            return Err(validation_err(
                path,
                line,
                format!("institution {id:?}: min_capital >= own_funds leaves no available funds"),
            ));
        }
        records.push(InstitutionRecord { id, own_funds, min_capital });
    }
    Ok(records)
}

fn read_exposures_csv(spec: &ExposureFile, decimal_scale: u8) -> Result<RawExposureTable> {
    let path = spec.path.as_path();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
        let expected = ["reporter_id", "counterparty_id", "amount"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(parse_err(
                path,
                1,
                format!("expected header `reporter_id,counterparty_id,amount`, found {headers:?}"),
            ));
        }
    }
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 columns, found {}", row.len())));
        }
        let amount = Money::parse(&row[2], decimal_scale)
            .map_err(|e| parse_err(path, line, format!("amount: {e}")))?;
        rows.push(RawExposureRow {
            line,
            reporter: row[0].to_string(),
            counterparty: row[1].to_string(),
            amount,
        });
    }
    Ok(RawExposureTable { layer: spec.layer, basis: spec.basis, file: spec.path.clone(), rows })
}
