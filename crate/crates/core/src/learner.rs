//! Symbol meaning learning and classification.
//!
//! For every symbol and every feature a 1-D Normal is fit, the fit is
//! cleaned by trimming samples outside two standard deviations and
//! refitting (repeated until no sample moves, since mislabelled data can
//! hide behind an inflated first-pass variance), and the features whose
//! cleaned std falls below `sigma_thresh` become the symbol's invariant
//! feature set. The invariant means and variances form a diagonal
//! Gaussian per symbol; symbols sharing an invariant feature set form a
//! mutually exclusive concept group.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::features::{Feature, FeatureDataset, FeatureVector};
use crate::stats;

/// Fit of one (symbol, feature) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureStat {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

/// Learner configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearnConfig {
    /// Features with cleaned std below this are invariant.
    pub sigma_thresh: f64,
    /// Minimum samples per symbol.
    pub n_min: usize,
    /// Lower bound on fitted stds; keeps covariances non-singular.
    pub sigma_floor: f64,
    /// Safety cap on cleaning passes.
    pub max_clean_passes: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self { sigma_thresh: 0.05, n_min: 10, sigma_floor: 1e-6, max_clean_passes: 50 }
    }
}

/// A symbol's concept model: invariant features with a diagonal
/// Gaussian over them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolModel {
    pub symbol: String,
    /// Invariant feature subset, in feature order.
    pub invariant: Vec<Feature>,
    /// Mean vector over `invariant`.
    pub mean: Vec<f64>,
    /// Diagonal covariance entries over `invariant`.
    pub variance: Vec<f64>,
}

impl SymbolModel {
    /// Diagonal Gaussian density of `x` restricted to the invariant
    /// features.
    pub fn pdf(&self, x: &FeatureVector) -> f64 {
        libm::exp(self.log_pdf(x))
    }

    pub fn log_pdf(&self, x: &FeatureVector) -> f64 {
        const LN_TWO_PI: f64 = 1.8378770664093453;
        let mut log_density = 0.0;
        for ((feature, mu), var) in self.invariant.iter().zip(&self.mean).zip(&self.variance) {
            let d = x.get(*feature) - mu;
            log_density += -0.5 * (LN_TWO_PI + libm::log(*var)) - d * d / (2.0 * var);
        }
        log_density
    }

    /// Mahalanobis distance of `x` from the model mean.
    pub fn mahalanobis(&self, x: &FeatureVector) -> f64 {
        let mut sum = 0.0;
        for ((feature, mu), var) in self.invariant.iter().zip(&self.mean).zip(&self.variance) {
            let d = x.get(*feature) - mu;
            sum += d * d / var;
        }
        libm::sqrt(sum)
    }
}

/// Free-function form of [`SymbolModel::pdf`].
pub fn pdf(model: &SymbolModel, x: &FeatureVector) -> f64 {
    model.pdf(x)
}

/// Symbols sharing one invariant feature set; mutually exclusive labels.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConceptGroup {
    pub features: Vec<Feature>,
    pub symbols: Vec<String>,
}

/// Config snapshot stored with a knowledge base.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KbConfig {
    pub sigma_thresh: f64,
    /// Mahalanobis acceptance radius realizing the PDF threshold.
    pub d_max: f64,
}

/// Learned symbol models plus their concept grouping.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnowledgeBase {
    /// Sorted by symbol name.
    pub models: Vec<SymbolModel>,
    /// Sorted by feature set.
    pub groups: Vec<ConceptGroup>,
    pub config: KbConfig,
}

impl KnowledgeBase {
    pub fn model_for(&self, symbol: &str) -> Option<&SymbolModel> {
        self.models.iter().find(|m| m.symbol == symbol)
    }

    pub fn group_of(&self, symbol: &str) -> Option<&ConceptGroup> {
        self.groups.iter().find(|g| g.symbols.iter().any(|s| s == symbol))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnError {
    /// Fewer than `n_min` samples for a symbol.
    TooFewSamples { got: usize, needed: usize },
    /// Cleaning removed every sample of a feature.
    AllFiltered(Feature),
    /// No feature is invariant for the symbol.
    Unlearnable,
    /// Not a single symbol could be learned.
    NoLearnableSymbols,
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::TooFewSamples { got, needed } => {
                write!(f, "only {got} samples, need at least {needed}")
            }
            LearnError::AllFiltered(feature) => {
                write!(f, "cleaning removed all values of feature {feature}")
            }
            LearnError::Unlearnable => write!(f, "no invariant feature below sigma_thresh"),
            LearnError::NoLearnableSymbols => write!(f, "no symbol could be learned"),
        }
    }
}

impl core::error::Error for LearnError {}

/// Per-symbol problem recorded while learning continues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnWarning {
    pub symbol: String,
    pub reason: LearnError,
}

impl fmt::Display for LearnWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "symbol `{}` skipped: {}", self.symbol, self.reason)
    }
}

/// Result of [`learn`]: the knowledge base plus per-symbol warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    pub kb: KnowledgeBase,
    pub warnings: Vec<LearnWarning>,
}

fn fit_columns(columns: &[Vec<f64>; 4], config: &LearnConfig) -> Vec<FeatureStat> {
    columns
        .iter()
        .map(|col| {
            let mu = stats::mean(col);
            let sigma = stats::sample_std(col, mu).max(config.sigma_floor);
            FeatureStat { mu, sigma, n: col.len() }
        })
        .collect()
}

fn columns_of(data: &[FeatureVector]) -> [Vec<f64>; 4] {
    let mut columns: [Vec<f64>; 4] = Default::default();
    for vector in data {
        for feature in Feature::ALL {
            columns[feature.index()].push(vector.get(feature));
        }
    }
    columns
}

/// Fits a 1-D Normal per feature: sample mean and sample standard
/// deviation (n-1 denominator), floored at `sigma_floor`.
pub fn fit_normals(data: &[FeatureVector], config: &LearnConfig) -> Result<Vec<FeatureStat>, LearnError> {
    let needed = config.n_min.max(2);
    if data.len() < needed {
        return Err(LearnError::TooFewSamples { got: data.len(), needed });
    }
    Ok(fit_columns(&columns_of(data), config))
}

/// Cleans mislabel noise per feature independently: drop values outside
/// `[mu - 2 sigma, mu + 2 sigma]`, refit, and repeat until a pass drops
/// nothing. Returns the surviving per-feature columns and final stats.
pub fn clean_noise(
    data: &[FeatureVector],
    stats_in: &[FeatureStat],
    config: &LearnConfig,
) -> Result<([Vec<f64>; 4], Vec<FeatureStat>), LearnError> {
    assert_eq!(stats_in.len(), Feature::COUNT, "one stat per feature expected");
    let mut columns = columns_of(data);
    let mut stats_out: Vec<FeatureStat> = stats_in.to_vec();
    for feature in Feature::ALL {
        let i = feature.index();
        let col = &mut columns[i];
        let mut stat = stats_in[i];
        for _ in 0..config.max_clean_passes {
            let lo = stat.mu - 2.0 * stat.sigma;
            let hi = stat.mu + 2.0 * stat.sigma;
            let before = col.len();
            col.retain(|v| (lo..=hi).contains(v));
            if col.is_empty() {
                return Err(LearnError::AllFiltered(feature));
            }
            let mu = stats::mean(col);
            let sigma = stats::sample_std(col, mu).max(config.sigma_floor);
            stat = FeatureStat { mu, sigma, n: col.len() };
            if col.len() == before {
                break;
            }
        }
        stats_out[i] = stat;
    }
    Ok((columns, stats_out))
}

/// The ordered subset of F whose cleaned std is below `sigma_thresh`.
pub fn find_invariant_features(stats: &[FeatureStat], sigma_thresh: f64) -> Vec<Feature> {
    Feature::ALL
        .iter()
        .copied()
        .filter(|f| stats[f.index()].sigma < sigma_thresh)
        .collect()
}

/// Restricts the cleaned stats to the invariant features, concatenating
/// means into a mean vector and variances into a diagonal covariance.
pub fn build_model(
    symbol: &str,
    stats: &[FeatureStat],
    invariant: &[Feature],
    config: &LearnConfig,
) -> Result<SymbolModel, LearnError> {
    if invariant.is_empty() {
        return Err(LearnError::Unlearnable);
    }
    let floor_var = config.sigma_floor * config.sigma_floor;
    Ok(SymbolModel {
        symbol: String::from(symbol),
        invariant: invariant.to_vec(),
        mean: invariant.iter().map(|f| stats[f.index()].mu).collect(),
        variance: invariant.iter().map(|f| (stats[f.index()].sigma * stats[f.index()].sigma).max(floor_var)).collect(),
    })
}

/// Runs fit, clean, invariant discovery, and model building per symbol,
/// then groups symbols by invariant feature set. Per-symbol failures
/// become warnings; learning fails only when no symbol is learnable.
pub fn learn(
    dataset: &FeatureDataset,
    config: &LearnConfig,
    d_max: f64,
) -> Result<LearnOutcome, LearnError> {
    let mut models = Vec::new();
    let mut warnings = Vec::new();
    for (symbol, data) in dataset.iter() {
        let result = (|| {
            let stats = fit_normals(data, config)?;
            let (_, cleaned) = clean_noise(data, &stats, config)?;
            let invariant = find_invariant_features(&cleaned, config.sigma_thresh);
            build_model(symbol, &cleaned, &invariant, config)
        })();
        match result {
            Ok(model) => models.push(model),
            Err(reason) => warnings.push(LearnWarning { symbol: symbol.to_string(), reason }),
        }
    }
    if models.is_empty() {
        return Err(LearnError::NoLearnableSymbols);
    }
    // Dataset iteration is sorted by symbol, so models arrive sorted.
    let mut groups: Vec<ConceptGroup> = Vec::new();
    for model in &models {
        match groups.iter_mut().find(|g| g.features == model.invariant) {
            Some(group) => group.symbols.push(model.symbol.clone()),
            None => groups.push(ConceptGroup {
                features: model.invariant.clone(),
                symbols: alloc::vec![model.symbol.clone()],
            }),
        }
    }
    groups.sort_by(|a, b| a.features.cmp(&b.features));
    let kb = KnowledgeBase {
        models,
        groups,
        config: KbConfig { sigma_thresh: config.sigma_thresh, d_max },
    };
    Ok(LearnOutcome { kb, warnings })
}

/// Per concept group, the symbol with the highest PDF among those within
/// `d_max` Mahalanobis distance; `None` (Unknown) when no symbol
/// qualifies. Ties break toward the lexicographically smaller symbol.
/// The result aligns with `kb.groups`.
pub fn classify(x: &FeatureVector, kb: &KnowledgeBase, d_max: f64) -> Vec<Option<String>> {
    kb.groups
        .iter()
        .map(|group| {
            let mut best: Option<(f64, &str)> = None;
            // Group symbols are sorted, so strict comparison keeps the
            // lexicographically smaller symbol on exact PDF ties.
            for symbol in &group.symbols {
                let model = kb.model_for(symbol).expect("group symbols have models");
                if model.mahalanobis(x) <= d_max {
                    let density = model.pdf(x);
                    if best.map_or(true, |(best_density, _)| density > best_density) {
                        best = Some((density, symbol));
                    }
                }
            }
            best.map(|(_, symbol)| String::from(symbol))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vectors(rows: &[[f64; 4]]) -> Vec<FeatureVector> {
        rows.iter().map(|r| FeatureVector::new(*r)).collect()
    }

    fn test_config() -> LearnConfig {
        LearnConfig { n_min: 2, ..LearnConfig::default() }
    }

    #[test]
    fn fit_matches_hand_arithmetic() {
        let data = vectors(&[[0.0; 4], [1.0; 4]]);
        let stats = fit_normals(&data, &test_config()).unwrap();
        for stat in stats {
            assert_eq!(stat.mu, 0.5);
            assert!((stat.sigma - 0.7071067811865476).abs() < 1e-12);
            assert_eq!(stat.n, 2);
        }
    }

    #[test]
    fn constant_data_hits_the_sigma_floor() {
        let data = vectors(&[[0.3; 4]; 5]);
        let stats = fit_normals(&data, &test_config()).unwrap();
        assert_eq!(stats[0].sigma, 1e-6);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let data = vectors(&[[0.1; 4]; 3]);
        assert_eq!(
            fit_normals(&data, &LearnConfig::default()).unwrap_err(),
            LearnError::TooFewSamples { got: 3, needed: 10 }
        );
    }

    #[test]
    fn cleaning_drops_the_planted_outlier() {
        // Five values at 0.5 and one at 0.0: the first window
        // [0.0084, 0.8249] excludes the zero; the refit collapses.
        let data = vectors(&[
            [0.5; 4],
            [0.5; 4],
            [0.5; 4],
            [0.5; 4],
            [0.5; 4],
            [0.0; 4],
        ]);
        let config = test_config();
        let stats = fit_normals(&data, &config).unwrap();
        assert!((stats[0].mu - 0.41666666666666669).abs() < 1e-12);
        assert!((stats[0].sigma - 0.20412414523193154).abs() < 1e-12);
        let (_, cleaned) = clean_noise(&data, &stats, &config).unwrap();
        for stat in cleaned {
            assert_eq!(stat.mu, 0.5);
            assert_eq!(stat.sigma, 1e-6);
            assert_eq!(stat.n, 5);
        }
    }

    #[test]
    fn cleaning_leaves_tight_data_unchanged() {
        let data = vectors(&[[0.4; 4], [0.5; 4], [0.5; 4], [0.6; 4]]);
        let config = test_config();
        let stats = fit_normals(&data, &config).unwrap();
        let (cols, cleaned) = clean_noise(&data, &stats, &config).unwrap();
        assert_eq!(cols[0].len(), 4);
        assert_eq!(cleaned[0].mu, stats[0].mu);
        assert_eq!(cleaned[0].sigma, stats[0].sigma);
    }

    #[test]
    fn cleaning_never_widens_sigma() {
        let data = vectors(&[
            [0.1; 4],
            [0.12; 4],
            [0.11; 4],
            [0.13; 4],
            [0.9; 4],
            [0.95; 4],
        ]);
        let config = test_config();
        let stats = fit_normals(&data, &config).unwrap();
        let (_, cleaned) = clean_noise(&data, &stats, &config).unwrap();
        for (before, after) in stats.iter().zip(cleaned.iter()) {
            assert!(after.sigma <= before.sigma + 1e-6);
        }
    }

    #[test]
    fn invariant_features_follow_the_threshold() {
        let stat = |sigma: f64| FeatureStat { mu: 0.5, sigma, n: 10 };
        let stats = alloc::vec![stat(0.01), stat(0.02), stat(0.01), stat(0.30)];
        assert_eq!(
            find_invariant_features(&stats, 0.05),
            alloc::vec![Feature::R, Feature::G, Feature::B]
        );

        let stats = alloc::vec![stat(0.2), stat(0.2), stat(0.2), stat(0.01)];
        assert_eq!(find_invariant_features(&stats, 0.05), alloc::vec![Feature::Area]);

        let stats = alloc::vec![stat(0.2), stat(0.2), stat(0.2), stat(0.2)];
        assert!(find_invariant_features(&stats, 0.05).is_empty());
    }

    #[test]
    fn build_model_restricts_to_invariants() {
        let stats = alloc::vec![
            FeatureStat { mu: 0.12, sigma: 0.01, n: 50 },
            FeatureStat { mu: 0.12, sigma: 0.01, n: 50 },
            FeatureStat { mu: 0.78, sigma: 0.01, n: 50 },
            FeatureStat { mu: 0.30, sigma: 0.30, n: 50 },
        ];
        let invariant = alloc::vec![Feature::R, Feature::G, Feature::B];
        let model = build_model("blue", &stats, &invariant, &test_config()).unwrap();
        assert_eq!(model.mean, alloc::vec![0.12, 0.12, 0.78]);
        for v in &model.variance {
            assert!((v - 0.0001).abs() < 1e-12);
        }
        assert_eq!(
            build_model("x", &stats, &[], &test_config()).unwrap_err(),
            LearnError::Unlearnable
        );
    }

    #[test]
    fn one_dimensional_model_works() {
        let stats = alloc::vec![
            FeatureStat { mu: 0.5, sigma: 0.2, n: 50 },
            FeatureStat { mu: 0.5, sigma: 0.2, n: 50 },
            FeatureStat { mu: 0.5, sigma: 0.2, n: 50 },
            FeatureStat { mu: 0.25, sigma: 0.01, n: 50 },
        ];
        let model = build_model("cube", &stats, &[Feature::Area], &test_config()).unwrap();
        assert_eq!(model.invariant, alloc::vec![Feature::Area]);
        assert_eq!(model.mean.len(), 1);
    }

    #[test]
    fn pdf_matches_closed_form_1d() {
        let model = SymbolModel {
            symbol: "s".into(),
            invariant: alloc::vec![Feature::R],
            mean: alloc::vec![0.5],
            variance: alloc::vec![0.01],
        };
        let at_mean = model.pdf(&FeatureVector::new([0.5, 0.0, 0.0, 0.0]));
        assert!((at_mean - 3.989422804014327).abs() < 1e-9);
        // Density one sigma out drops by exp(-1/2).
        let at_sigma = model.pdf(&FeatureVector::new([0.6, 0.0, 0.0, 0.0]));
        assert!((at_sigma / at_mean - libm::exp(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn pdf_peaks_at_the_mean() {
        let model = SymbolModel {
            symbol: "s".into(),
            invariant: alloc::vec![Feature::R, Feature::G, Feature::B],
            mean: alloc::vec![0.3, 0.4, 0.5],
            variance: alloc::vec![0.01, 0.02, 0.03],
        };
        let peak = model.pdf(&FeatureVector::new([0.3, 0.4, 0.5, 0.0]));
        for offset in [-0.1, -0.05, 0.05, 0.1] {
            let x = FeatureVector::new([0.3 + offset, 0.4, 0.5, 0.0]);
            assert!(model.pdf(&x) < peak);
        }
    }

    fn two_symbol_kb() -> KnowledgeBase {
        let blue = SymbolModel {
            symbol: "blue".into(),
            invariant: alloc::vec![Feature::R, Feature::G, Feature::B],
            mean: alloc::vec![0.10, 0.35, 0.80],
            variance: alloc::vec![0.001, 0.001, 0.001],
        };
        let red = SymbolModel {
            symbol: "red".into(),
            invariant: alloc::vec![Feature::R, Feature::G, Feature::B],
            mean: alloc::vec![0.60, 0.10, 0.10],
            variance: alloc::vec![0.001, 0.001, 0.001],
        };
        KnowledgeBase {
            groups: alloc::vec![ConceptGroup {
                features: alloc::vec![Feature::R, Feature::G, Feature::B],
                symbols: alloc::vec!["blue".into(), "red".into()],
            }],
            models: alloc::vec![blue, red],
            config: KbConfig { sigma_thresh: 0.05, d_max: 3.0 },
        }
    }

    #[test]
    fn classify_picks_the_mode_owner() {
        let kb = two_symbol_kb();
        let result = classify(&FeatureVector::new([0.10, 0.35, 0.80, 0.2]), &kb, 3.0);
        assert_eq!(result, alloc::vec![Some("blue".to_string())]);
    }

    #[test]
    fn classify_returns_unknown_beyond_dmax() {
        let kb = two_symbol_kb();
        let result = classify(&FeatureVector::new([0.35, 0.9, 0.45, 0.2]), &kb, 3.0);
        assert_eq!(result, alloc::vec![None]);
    }

    #[test]
    fn classify_breaks_ties_lexicographically() {
        let mut kb = two_symbol_kb();
        // Give both symbols identical models; every x ties exactly.
        kb.models[1].mean = kb.models[0].mean.clone();
        let result = classify(&FeatureVector::new([0.10, 0.35, 0.80, 0.2]), &kb, 3.0);
        assert_eq!(result, alloc::vec![Some("blue".to_string())]);
    }

    #[test]
    fn learn_groups_symbols_by_invariant_set() {
        // Two colour symbols over shapes, two shape symbols over colours.
        let mut dataset = FeatureDataset::new();
        let areas = [0.06, 0.12, 0.25];
        for (i, area) in areas.iter().cycle().take(30).enumerate() {
            dataset.push("blue", FeatureVector::new([0.10, 0.35, 0.80, *area]));
            dataset.push("red", FeatureVector::new([0.60, 0.10, 0.10, *area]));
            let colour = if i % 2 == 0 { [0.10, 0.35, 0.80] } else { [0.60, 0.10, 0.10] };
            dataset.push("cube", FeatureVector::new([colour[0], colour[1], colour[2], 0.25]));
            dataset.push("cell", FeatureVector::new([colour[0], colour[1], colour[2], 0.06]));
        }
        let outcome = learn(&dataset, &LearnConfig::default(), 3.0).unwrap();
        assert!(outcome.warnings.is_empty());
        let kb = outcome.kb;
        assert_eq!(kb.groups.len(), 2);
        let colour_group = kb.group_of("blue").unwrap();
        assert_eq!(colour_group.features, alloc::vec![Feature::R, Feature::G, Feature::B]);
        assert_eq!(colour_group.symbols, alloc::vec!["blue".to_string(), "red".to_string()]);
        let shape_group = kb.group_of("cube").unwrap();
        assert_eq!(shape_group.features, alloc::vec![Feature::Area]);
    }

    #[test]
    fn learn_single_symbol_dataset() {
        let mut dataset = FeatureDataset::new();
        for _ in 0..20 {
            dataset.push("blue", FeatureVector::new([0.10, 0.35, 0.80, 0.5]));
        }
        let outcome = learn(&dataset, &LearnConfig::default(), 3.0).unwrap();
        assert_eq!(outcome.kb.models.len(), 1);
        assert_eq!(outcome.kb.groups.len(), 1);
        // Constant columns everywhere: all four features are invariant.
        assert_eq!(outcome.kb.models[0].invariant.len(), 4);
    }

    #[test]
    fn learn_fails_only_when_nothing_is_learnable() {
        let mut dataset = FeatureDataset::new();
        dataset.push("sparse", FeatureVector::new([0.1, 0.2, 0.3, 0.4]));
        let err = learn(&dataset, &LearnConfig::default(), 3.0).unwrap_err();
        assert_eq!(err, LearnError::NoLearnableSymbols);
    }
}
