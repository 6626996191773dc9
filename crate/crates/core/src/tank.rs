//! Daily rainwater-tank water balance and monthly aggregation.
//!
//! Operating rule is yield before spill: each day's demand is served from
//! storage plus the day's inflow, and only what is left above capacity
//! spills.

use chrono::{Datelike, Days, NaiveDate};
use serde::Deserialize;

use crate::error::{GknnError, Result};
use crate::sampler::SeededSampler;
use crate::upscaling::{MonthlyTrainingRecord, Schema, TrainingTable};

/// Daily rainfall at or above this depth (mm) counts as a rain day.
pub const RAIN_DAY_THRESHOLD_MM: f64 = 1.0;

/// Temperature (°C) above which demand grows.
pub const DEMAND_PIVOT_C: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankConfig {
    /// liters
    pub capacity: f64,
    /// m²
    pub roof_area: f64,
    pub runoff_coeff: f64,
    /// liters/day
    pub base_demand: f64,
    /// fractional demand increase per °C above the pivot
    #[serde(default)]
    pub demand_temp_coeff: f64,
    /// liters
    #[serde(default)]
    pub initial_storage: f64,
}

impl TankConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("capacity", self.capacity),
            ("roof_area", self.roof_area),
            ("runoff_coeff", self.runoff_coeff),
            ("base_demand", self.base_demand),
            ("demand_temp_coeff", self.demand_temp_coeff),
            ("initial_storage", self.initial_storage),
        ];
        for (name, x) in fields {
            // capacity may be +inf for an unconstrained tank
            let ok = if name == "capacity" { x >= 0.0 && !x.is_nan() } else { x.is_finite() && x >= 0.0 };
            if !ok {
                return Err(GknnError::InvalidConfig(format!("{name} = {x} must be finite and >= 0")));
            }
        }
        if self.runoff_coeff > 1.0 {
            return Err(GknnError::InvalidConfig(format!("runoff_coeff = {} exceeds 1", self.runoff_coeff)));
        }
        if self.initial_storage > self.capacity {
            return Err(GknnError::InvalidConfig(format!(
                "initial_storage {} exceeds capacity {}",
                self.initial_storage, self.capacity
            )));
        }
        Ok(())
    }

    pub fn demand(&self, temperature: f64) -> f64 {
        self.base_demand * (1.0 + self.demand_temp_coeff * (temperature - DEMAND_PIVOT_C).max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyClimateRecord {
    pub date: NaiveDate,
    /// mm/day
    pub rainfall: f64,
    /// °C
    pub temperature: f64,
}

/// Checks non-negative finite rainfall and consecutive daily dates.
pub fn validate_climate(climate: &[DailyClimateRecord]) -> Result<()> {
    if climate.is_empty() {
        return Err(GknnError::InvalidClimate("no daily records".into()));
    }
    for (i, r) in climate.iter().enumerate() {
        if !r.rainfall.is_finite() || r.rainfall < 0.0 {
            return Err(GknnError::InvalidClimate(format!("{}: rainfall {} must be >= 0", r.date, r.rainfall)));
        }
        if !r.temperature.is_finite() {
            return Err(GknnError::InvalidClimate(format!("{}: temperature is not finite", r.date)));
        }
        if i > 0 && climate[i - 1].date.checked_add_days(Days::new(1)) != Some(r.date) {
            return Err(GknnError::InvalidClimate(format!(
                "dates not contiguous: {} followed by {}",
                climate[i - 1].date,
                r.date
            )));
        }
    }
    Ok(())
}

/// One day of the balance, all in liters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyBalance {
    pub inflow: f64,
    pub demand: f64,
    pub yield_value: f64,
    /// storage at the start of the day
    pub storage_before: f64,
    /// storage at the end of the day
    pub storage: f64,
    pub spill: f64,
}

pub fn simulate_tank(climate: &[DailyClimateRecord], cfg: &TankConfig) -> Result<Vec<DailyBalance>> {
    cfg.validate()?;
    validate_climate(climate)?;
    let mut storage = cfg.initial_storage;
    Ok(climate
        .iter()
        .map(|day| {
            // 1 mm over 1 m² is 1 L
            let inflow = cfg.runoff_coeff * cfg.roof_area * day.rainfall;
            let demand = cfg.demand(day.temperature);
            let available = storage + inflow;
            let yield_value = demand.min(available);
            let after = (available - yield_value).min(cfg.capacity);
            let spill = available - yield_value - after;
            let out = DailyBalance {
                inflow,
                demand,
                yield_value,
                storage_before: storage,
                storage: after,
                spill,
            };
            storage = after;
            out
        })
        .collect())
}

/// Sums daily yields and rainfall per calendar month, counts rain days and
/// averages temperature, emitting the columns of `schema`.
pub fn aggregate_monthly(climate: &[DailyClimateRecord], yields: &[f64], schema: Schema) -> Result<TrainingTable> {
    if climate.len() != yields.len() {
        return Err(GknnError::LengthMismatch {
            what: "daily yield series",
            expected: climate.len(),
            actual: yields.len(),
        });
    }
    validate_climate(climate)?;
    let mut records = Vec::new();
    let mut start = 0;
    while start < climate.len() {
        let (year, month) = (climate[start].date.year(), climate[start].date.month());
        let len = climate[start..]
            .iter()
            .take_while(|d| d.date.year() == year && d.date.month() == month)
            .count();
        let days = &climate[start..start + len];
        let yield_value: f64 = yields[start..start + len].iter().sum();
        let rain: f64 = days.iter().map(|d| d.rainfall).sum();
        let rain_days = days.iter().filter(|d| d.rainfall >= RAIN_DAY_THRESHOLD_MM).count() as f64;
        let avg_temp = days.iter().map(|d| d.temperature).sum::<f64>() / len as f64;
        let climatic = match schema {
            Schema::Coombes => vec![avg_temp, rain_days, rain],
            Schema::Knn | Schema::Bootstrap => vec![rain],
        };
        records.push(MonthlyTrainingRecord {
            month_label: schema.has_month_label().then_some(month as u8),
            climatic,
            yield_value,
        });
        start += len;
    }
    TrainingTable::new(schema, records)
}

/// A seeded daily climate for fixtures: seasonal wet-day probability with
/// exponential depths and a sinusoidal temperature with uniform noise.
pub fn synthetic_daily_climate(start: NaiveDate, days: usize, seed: u64) -> Vec<DailyClimateRecord> {
    let mut stream = SeededSampler::new(seed, 0).stream();
    let mut date = start;
    (0..days)
        .map(|t| {
            let phase = 2.0 * std::f64::consts::PI * (date.ordinal0() as f64 / 365.25);
            let wet_prob = 0.35 + 0.15 * phase.cos();
            let rainfall = if stream.uniform(t, 0) < wet_prob {
                -8.0 * (-stream.uniform(t, 1)).ln_1p()
            } else {
                0.0
            };
            let temperature = 18.0 + 7.0 * phase.cos() + 6.0 * (stream.uniform(t, 2) - 0.5);
            let rec = DailyClimateRecord {
                date,
                rainfall,
                temperature,
            };
            date = date.succ_opt().expect("date in range");
            rec
        })
        .collect()
}
