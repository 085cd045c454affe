//! Auxiliary per-entity series (IAU membership, GDP, population), base-year
//! normalization and the downloads ∝ GDP^b · population^c fit.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndicatorError;

pub const DEFAULT_BASE_YEAR: i32 = 2005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuxKind {
    IauMembers,
    GdpPerCapita,
    Population,
    GdpTotal,
}

impl AuxKind {
    pub const ALL: [AuxKind; 4] = [AuxKind::IauMembers, AuxKind::GdpPerCapita, AuxKind::Population, AuxKind::GdpTotal];

    pub fn as_str(self) -> &'static str {
        match self {
            AuxKind::IauMembers => "IAU_MEMBERS",
            AuxKind::GdpPerCapita => "GDP_PER_CAPITA",
            AuxKind::Population => "POPULATION",
            AuxKind::GdpTotal => "GDP_TOTAL",
        }
    }
}

impl fmt::Display for AuxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AuxKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown series kind {s:?}"))
    }
}

/// A yearly series for one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxSeries {
    pub entity: String,
    pub kind: AuxKind,
    pub values: BTreeMap<i32, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum AuxError {
    #[error("aux series CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("aux series CSV record {record}: {reason}")]
    Invalid { record: usize, reason: String },
}

#[derive(Debug, Deserialize)]
struct AuxRow {
    entity: String,
    kind: String,
    year: i32,
    value: f64,
}

/// All auxiliary series, keyed by (entity, kind).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuxTable {
    series: BTreeMap<(String, AuxKind), AuxSeries>,
}

impl AuxTable {
    /// Reads `entity,kind,year,value` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, AuxError> {
        let mut table = AuxTable::default();
        for (i, row) in csv::Reader::from_reader(reader).deserialize::<AuxRow>().enumerate() {
            let row = row?;
            let invalid = |reason: String| AuxError::Invalid { record: i + 1, reason };
            let kind: AuxKind = row.kind.parse().map_err(invalid)?;
            if !row.value.is_finite() || row.value < 0.0 {
                return Err(invalid(format!("value {} must be finite and non-negative", row.value)));
            }
            table.insert(&row.entity, kind, row.year, row.value);
        }
        Ok(table)
    }

    pub fn insert(&mut self, entity: &str, kind: AuxKind, year: i32, value: f64) {
        self.series
            .entry((entity.to_string(), kind))
            .or_insert_with(|| AuxSeries { entity: entity.to_string(), kind, values: BTreeMap::new() })
            .values
            .insert(year, value);
    }

    pub fn get(&self, entity: &str, kind: AuxKind) -> Option<&AuxSeries> {
        self.series.get(&(entity.to_string(), kind))
    }

    pub fn value(&self, entity: &str, kind: AuxKind, year: i32) -> Option<f64> {
        self.get(entity, kind).and_then(|s| s.values.get(&year).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = &AuxSeries> {
        self.series.values()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity,kind,year,value\n");
        for s in self.iter() {
            for (y, v) in &s.values {
                out.push_str(&format!("{},{},{},{}\n", s.entity, s.kind, y, v));
            }
        }
        out
    }
}

/// Divides every value by the value at `base_year`.
pub fn normalize_to_base_year(series: &BTreeMap<i32, f64>, base_year: i32) -> Result<BTreeMap<i32, f64>, IndicatorError> {
    let base = *series.get(&base_year).ok_or(IndicatorError::MissingBaseYear(base_year))?;
    if base == 0.0 {
        return Err(IndicatorError::ZeroBaseValue(base_year));
    }
    Ok(series.iter().map(|(&y, &v)| (y, v / base)).collect())
}

/// One entity's downloads with its economic covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomicPoint {
    pub downloads: f64,
    pub gdp: f64,
    pub population: f64,
}

/// log(downloads) = intercept + gdp_exponent·log(GDP) + population_exponent·log(population).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub intercept: f64,
    pub gdp_exponent: f64,
    pub population_exponent: f64,
    /// Root-mean-square residual in log space.
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares in log space on centred variables.
pub fn fit_gdp_power_law(points: &[EconomicPoint]) -> Result<PowerLawFit, IndicatorError> {
    if points.len() < 3 {
        return Err(IndicatorError::DegenerateInput(format!("need at least 3 entities, got {}", points.len())));
    }
    if points
        .iter()
        .any(|p| !(p.downloads > 0.0 && p.gdp > 0.0 && p.population > 0.0) || !(p.downloads * p.gdp * p.population).is_finite())
    {
        return Err(IndicatorError::DegenerateInput("all quantities must be positive and finite".into()));
    }
    let y: Vec<f64> = points.iter().map(|p| p.downloads.ln()).collect();
    let x1: Vec<f64> = points.iter().map(|p| p.gdp.ln()).collect();
    let x2: Vec<f64> = points.iter().map(|p| p.population.ln()).collect();
    let n = points.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (my, m1, m2) = (mean(&y), mean(&x1), mean(&x2));

    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..points.len() {
        let (d1, d2, dy) = (x1[i] - m1, x2[i] - m2, y[i] - my);
        s11 += d1 * d1;
        s12 += d1 * d2;
        s22 += d2 * d2;
        s1y += d1 * dy;
        s2y += d2 * dy;
    }
    let det = s11 * s22 - s12 * s12;
    if s11 <= 0.0 || s22 <= 0.0 || det <= 1e-10 * s11 * s22 {
        return Err(IndicatorError::DegenerateInput("log GDP and log population are collinear or constant".into()));
    }
    let b = (s22 * s1y - s12 * s2y) / det;
    let c = (s11 * s2y - s12 * s1y) / det;
    let a = my - b * m1 - c * m2;
    let sse: f64 = (0..points.len()).map(|i| (y[i] - a - b * x1[i] - c * x2[i]).powi(2)).sum();

    Ok(PowerLawFit {
        intercept: a,
        gdp_exponent: b,
        population_exponent: c,
        rms_residual: (sse / n).sqrt(),
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_cases() {
        let constant = BTreeMap::from([(2005, 7.0), (2006, 7.0), (2010, 7.0)]);
        assert!(normalize_to_base_year(&constant, 2005).unwrap().values().all(|&v| v == 1.0));
        let s = BTreeMap::from([(2005, 200.0), (2010, 300.0)]);
        assert_eq!(normalize_to_base_year(&s, 2005).unwrap(), BTreeMap::from([(2005, 1.0), (2010, 1.5)]));
        assert!(matches!(normalize_to_base_year(&s, 2004), Err(IndicatorError::MissingBaseYear(2004))));
        let z = BTreeMap::from([(2005, 0.0), (2010, 3.0)]);
        assert!(matches!(normalize_to_base_year(&z, 2005), Err(IndicatorError::ZeroBaseValue(2005))));
    }

    #[test]
    fn exact_power_law() {
        let points: Vec<EconomicPoint> = [(1.0e11, 5.0e6), (3.0e12, 4.0e7), (2.0e13, 3.0e8), (5.0e11, 9.0e7), (8.0e12, 1.2e9)]
            .iter()
            .map(|&(gdp, population)| EconomicPoint { downloads: 3.0 * gdp * gdp / population, gdp, population })
            .collect();
        let fit = fit_gdp_power_law(&points).unwrap();
        assert!((fit.gdp_exponent - 2.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.population_exponent + 1.0).abs() < 1e-9, "{fit:?}");
        assert!(fit.rms_residual <= 1e-9);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn degenerate_fits() {
        let same = EconomicPoint { downloads: 10.0, gdp: 1e12, population: 1e7 };
        assert!(matches!(fit_gdp_power_law(&[same; 5]), Err(IndicatorError::DegenerateInput(_))));
        assert!(matches!(fit_gdp_power_law(&[same; 2]), Err(IndicatorError::DegenerateInput(_))));
        // GDP proportional to population: collinear in log space.
        let collinear: Vec<_> = (1..6)
            .map(|i| EconomicPoint { downloads: i as f64, gdp: 1e4 * i as f64 * 1e6, population: i as f64 * 1e6 })
            .collect();
        assert!(matches!(fit_gdp_power_law(&collinear), Err(IndicatorError::DegenerateInput(_))));
        let zero = [EconomicPoint { downloads: 0.0, ..same }, same, same];
        assert!(fit_gdp_power_law(&zero).is_err());
    }

    #[test]
    fn aux_csv_round_trip_and_validation() {
        let text = "entity,kind,year,value\nNL,IAU_MEMBERS,2008,230\nNL,GDP_PER_CAPITA,2005,41000.5\n";
        let table = AuxTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(table.value("NL", AuxKind::IauMembers, 2008), Some(230.0));
        assert_eq!(AuxTable::from_csv(table.to_csv().as_bytes()).unwrap(), table);
        assert!(AuxTable::from_csv("entity,kind,year,value\nNL,GDP,2005,1\n".as_bytes()).is_err());
        assert!(AuxTable::from_csv("entity,kind,year,value\nNL,POPULATION,2005,-1\n".as_bytes()).is_err());
        assert!(AuxTable::from_csv("entity,kind,year,value\nNL,POPULATION,x,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn normalization_preserves_ratios(values in proptest::collection::btree_map(1990i32..2020, 1e-3f64..1e9, 1..20), base in 0.5f64..1e6) {
            let mut series = values;
            series.insert(2005, base);
            let norm = normalize_to_base_year(&series, 2005).unwrap();
            prop_assert_eq!(norm[&2005], 1.0);
            for (y1, v1) in &series {
                for (y2, v2) in &series {
                    let lhs = norm[y1] / norm[y2];
                    let rhs = v1 / v2;
                    prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
                }
            }
        }
    }
}
