use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::indicators::EconomicPoint;

/// Entities whose downloads follow k · GDP^b · population^c with
/// multiplicative log-normal noise.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomyModel {
    pub entities: usize,
    pub scale: f64,
    pub gdp_exponent: f64,
    pub population_exponent: f64,
    /// Standard deviation of the log-space noise.
    pub noise: f64,
    pub gdp_per_capita: (f64, f64),
    pub population: (f64, f64),
    pub seed: u64,
}

impl Default for EconomyModel {
    fn default() -> Self {
        Self {
            entities: 50,
            scale: 1e-12,
            gdp_exponent: 2.0,
            population_exponent: -1.0,
            noise: 0.0,
            gdp_per_capita: (500.0, 80_000.0),
            population: (1e5, 1.5e9),
            seed: 0,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// One point per entity; GDP is the total (per capita × population).
pub fn generate_economy(model: &EconomyModel) -> Vec<EconomicPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let noise = Normal::new(0.0, model.noise).expect("finite noise");
    (0..model.entities)
        .map(|_| {
            let per_capita = log_uniform(&mut rng, model.gdp_per_capita);
            let population = log_uniform(&mut rng, model.population);
            let gdp = per_capita * population;
            let downloads = model.scale
                * gdp.powf(model.gdp_exponent)
                * population.powf(model.population_exponent)
                * noise.sample(&mut rng).exp();
            EconomicPoint { downloads, gdp, population }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::fit_gdp_power_law;

    #[test]
    fn noise_free_points_follow_the_law_exactly() {
        let points = generate_economy(&EconomyModel { seed: 3, ..Default::default() });
        assert_eq!(points.len(), 50);
        for p in &points {
            let expected = 1e-12 * p.gdp * p.gdp / p.population;
            assert!(((p.downloads - expected) / expected).abs() < 1e-12);
        }
        let fit = fit_gdp_power_law(&points).unwrap();
        assert!((fit.gdp_exponent - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reproducible() {
        let m = EconomyModel { noise: 0.05, seed: 11, ..Default::default() };
        assert_eq!(generate_economy(&m), generate_economy(&m));
    }
}
