use chrono::{Datelike, NaiveDate};
use gknn::tank::{aggregate_monthly, simulate_tank, synthetic_daily_climate, DailyClimateRecord, TankConfig};
use gknn::upscaling::Schema;

/// Column-by-column recomputation of the balance, written the way a
/// spreadsheet would lay it out.
fn spreadsheet(climate: &[DailyClimateRecord], cfg: &TankConfig) -> (Vec<f64>, Vec<f64>) {
    let n = climate.len();
    let inflow: Vec<f64> = climate.iter().map(|d| d.rainfall * cfg.roof_area * cfg.runoff_coeff).collect();
    let demand: Vec<f64> = climate
        .iter()
        .map(|d| cfg.base_demand + cfg.base_demand * cfg.demand_temp_coeff * if d.temperature > 20.0 { d.temperature - 20.0 } else { 0.0 })
        .collect();
    let mut storage = vec![0.0; n + 1];
    let mut supplied = vec![0.0; n];
    storage[0] = cfg.initial_storage;
    for i in 0..n {
        let water = storage[i] + inflow[i];
        supplied[i] = if water >= demand[i] { demand[i] } else { water };
        let left = water - supplied[i];
        storage[i + 1] = if left > cfg.capacity { cfg.capacity } else { left };
    }
    (supplied, storage[1..].to_vec())
}

fn config() -> TankConfig {
    TankConfig { capacity: 1000.0, roof_area: 100.0, runoff_coeff: 0.9, base_demand: 150.0, demand_temp_coeff: 0.0, initial_storage: 0.0 }
}

#[test]
fn three_day_fixture_matches_spreadsheet() {
    let start = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
    let climate: Vec<_> = [10.0, 0.0, 0.0]
        .iter()
        .enumerate()
        .map(|(i, &r)| DailyClimateRecord { date: start + chrono::Days::new(i as u64), rainfall: r, temperature: 20.0 })
        .collect();
    let out = simulate_tank(&climate, &config()).unwrap();
    let (yields, storage) = spreadsheet(&climate, &config());
    assert_eq!(yields, vec![150.0, 150.0, 150.0]);
    assert_eq!(storage, vec![750.0, 600.0, 450.0]);
    assert_eq!(out.iter().map(|b| b.yield_value).collect::<Vec<_>>(), yields);
    assert_eq!(out.iter().map(|b| b.storage).collect::<Vec<_>>(), storage);
}

#[test]
fn long_record_balance_and_month_count() {
    let start = NaiveDate::from_ymd_opt(1880, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let days = (end - start).num_days() as usize;
    let climate = synthetic_daily_climate(start, days, 140);
    assert_eq!(climate.last().unwrap().date.year(), 2019);
    let cfg = TankConfig { capacity: 5000.0, roof_area: 150.0, runoff_coeff: 0.85, base_demand: 300.0, demand_temp_coeff: 0.03, initial_storage: 1000.0 };
    let out = simulate_tank(&climate, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for b in &out {
        worst = worst.max((b.storage - b.storage_before - (b.inflow - b.yield_value - b.spill)).abs());
        assert!(b.storage >= 0.0 && b.storage <= cfg.capacity && b.spill >= 0.0 && b.yield_value <= b.demand);
    }
    assert!(worst <= 1e-9, "worst daily imbalance {worst}");

    let (yields, storage) = spreadsheet(&climate, &cfg);
    for ((b, y), s) in out.iter().zip(&yields).zip(&storage) {
        assert!((b.yield_value - y).abs() < 1e-9 && (b.storage - s).abs() < 1e-9);
    }

    let daily: Vec<f64> = out.iter().map(|b| b.yield_value).collect();
    for schema in [Schema::Coombes, Schema::Knn, Schema::Bootstrap] {
        let monthly = aggregate_monthly(&climate, &daily, schema).unwrap();
        assert_eq!(monthly.len(), 140 * 12);
        let total: f64 = monthly.yields().iter().sum();
        assert!((total - daily.iter().sum::<f64>()).abs() < 1e-6 * total);
    }
}
