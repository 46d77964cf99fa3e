//! Feature engineering: cyclical encodings for key and release month,
//! boundary-month indicators, one-hot genre, and z-score standardization of
//! popularity and duration fitted on the training split only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Genre, TrackRecord};

/// Length of the assembled input vector.
pub const FEATURE_DIM: usize = 20;

/// Column names, in assembly order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "x_pop_z",
    "x_dur_z",
    "x_ins",
    "x_spc",
    "x_val",
    "x_ldn",
    "x_acn",
    "x_mod",
    "x_key_cos",
    "x_key_sin",
    "x_mon_cos",
    "x_mon_sin",
    "x_jan",
    "x_dec",
    "x_gen_pop",
    "x_gen_rap",
    "x_gen_rock",
    "x_gen_latin",
    "x_gen_edm",
    "x_gen_rnb",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Training-split statistics for the two standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mu_pop: f64,
    pub sigma_pop: f64,
    pub mu_dur: f64,
    pub sigma_dur: f64,
}

/// The assembled 20-component input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Map a periodic integer onto the unit circle:
/// `(cos(2π·value/period), sin(2π·value/period))`.
pub fn encode_cyclic(value: u32, period: u32) -> Result<(f64, f64)> {
    if period == 0 {
        return Err(Error::InvalidInput("cyclic encoding period must be positive".into()));
    }
    let angle = 2.0 * std::f64::consts::PI * f64::from(value) / f64::from(period);
    Ok((angle.cos(), angle.sin()))
}

/// Binary indicators for the asymmetric boundary months.
pub fn encode_boundary_months(month: u32) -> Result<(u8, u8)> {
    match month {
        1 => Ok((1, 0)),
        12 => Ok((0, 1)),
        2..=11 => Ok((0, 0)),
        _ => Err(Error::InvalidInput(format!("month {month} out of 1..=12"))),
    }
}

/// One-hot over the fixed genre order (pop, rap, rock, latin, edm, rnb).
pub fn encode_genre(genre: Genre) -> [f64; 6] {
    let mut v = [0.0; 6];
    v[genre.index()] = 1.0;
    v
}

fn mean_and_population_sigma(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mu = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mu).powi(2)).sum();
    (mu, (ss / n as f64).sqrt(), n)
}

/// Fit μ and population σ for popularity and duration over the training
/// split. Never call on validation data.
pub fn fit_standardizer(train: &[TrackRecord]) -> Result<StandardizationParams> {
    if train.is_empty() {
        return Err(Error::InvalidInput("cannot fit standardizer on an empty split".into()));
    }
    let (mu_pop, sigma_pop, _) = mean_and_population_sigma(train.iter().map(|r| r.popularity));
    let (mu_dur, sigma_dur, _) = mean_and_population_sigma(train.iter().map(|r| r.duration_ms));
    if sigma_pop <= 0.0 {
        return Err(Error::ZeroVariance { feature: "popularity" });
    }
    if sigma_dur <= 0.0 {
        return Err(Error::ZeroVariance { feature: "duration_ms" });
    }
    Ok(StandardizationParams { mu_pop, sigma_pop, mu_dur, sigma_dur })
}

/// Build the input vector for one record. Loudness and acousticness pass
/// through unscaled; popularity and duration are z-scored with the fitted
/// training statistics.
pub fn assemble(track: &TrackRecord, params: &StandardizationParams) -> Result<FeatureVector> {
    let (key_cos, key_sin) = encode_cyclic(u32::from(track.key), 12)?;
    let month = track.release_month();
    let (mon_cos, mon_sin) = encode_cyclic(month, 12)?;
    let (jan, dec) = encode_boundary_months(month)?;
    let genre = encode_genre(track.genre);

    let mut v = [0.0; FEATURE_DIM];
    v[0] = (track.popularity - params.mu_pop) / params.sigma_pop;
    v[1] = (track.duration_ms - params.mu_dur) / params.sigma_dur;
    v[2] = track.instrumentalness;
    v[3] = track.speechiness;
    v[4] = track.valence;
    v[5] = track.loudness;
    v[6] = track.acousticness;
    v[7] = f64::from(track.mode);
    v[8] = key_cos;
    v[9] = key_sin;
    v[10] = mon_cos;
    v[11] = mon_sin;
    v[12] = f64::from(jan);
    v[13] = f64::from(dec);
    v[14..20].copy_from_slice(&genre);
    Ok(FeatureVector(v))
}

/// Featurize a whole slice of records with shared parameters.
pub fn assemble_all(
    records: &[TrackRecord],
    params: &StandardizationParams,
) -> Result<Vec<FeatureVector>> {
    records.iter().map(|r| assemble(r, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn track(key: u8, month: u32, genre: Genre, pop: f64, dur: f64) -> TrackRecord {
        TrackRecord {
            track_id: "t".into(),
            title: "t".into(),
            artist: "a".into(),
            release_date: NaiveDate::from_ymd_opt(2010, month, 5).unwrap(),
            month_imputed: false,
            genre,
            acousticness: 0.3,
            danceability: 0.5,
            energy: 0.6,
            instrumentalness: 0.02,
            liveness: 0.1,
            speechiness: 0.04,
            valence: 0.7,
            loudness: -8.0,
            popularity: pop,
            tempo: 118.0,
            mode: 1,
            key,
            duration_ms: dur,
        }
    }

    #[test]
    fn cyclic_encoding_hits_cardinal_angles() {
        let (c, s) = encode_cyclic(0, 12).unwrap();
        assert_eq!((c, s), (1.0, 0.0));
        let (c, s) = encode_cyclic(3, 12).unwrap();
        assert!(c.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        let (c, s) = encode_cyclic(6, 12).unwrap();
        assert!((c + 1.0).abs() < 1e-12 && s.abs() < 1e-12);
        assert!(encode_cyclic(1, 0).is_err());
    }

    #[test]
    fn boundary_months() {
        assert_eq!(encode_boundary_months(1).unwrap(), (1, 0));
        assert_eq!(encode_boundary_months(12).unwrap(), (0, 1));
        assert_eq!(encode_boundary_months(6).unwrap(), (0, 0));
        assert!(encode_boundary_months(0).is_err());
        assert!(encode_boundary_months(13).is_err());
    }

    #[test]
    fn genre_one_hot_order() {
        assert_eq!(encode_genre(Genre::Pop), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(encode_genre(Genre::Rnb), [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        for g in Genre::ALL {
            let sum: f64 = encode_genre(g).iter().sum();
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn standardizer_uses_population_sigma() {
        let train: Vec<TrackRecord> = [1.0, 2.0, 3.0]
            .iter()
            .map(|d| track(0, 6, Genre::Pop, 10.0 * d, *d))
            .collect();
        let params = fit_standardizer(&train).unwrap();
        assert!((params.mu_dur - 2.0).abs() < 1e-15);
        assert!((params.sigma_dur - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardizer_rejects_constant_feature() {
        let train: Vec<TrackRecord> =
            (0..3).map(|_| track(0, 6, Genre::Pop, 50.0, 200_000.0)).collect();
        match fit_standardizer(&train) {
            Err(Error::ZeroVariance { feature }) => assert_eq!(feature, "popularity"),
            other => panic!("expected zero-variance error, got {other:?}"),
        }
    }

    #[test]
    fn train_split_z_scores_have_zero_mean_unit_variance() {
        let train: Vec<TrackRecord> = (0..50)
            .map(|i| {
                track(0, 6, Genre::Pop, 30.0 + (i as f64) * 0.7, 150_000.0 + (i as f64) * 900.0)
            })
            .collect();
        let params = fit_standardizer(&train).unwrap();
        let vectors = assemble_all(&train, &params).unwrap();
        for idx in [0usize, 1] {
            let (mu, sigma, _) =
                mean_and_population_sigma(vectors.iter().map(|v| v.0[idx]));
            assert!(mu.abs() < 1e-9, "mean {mu} at {idx}");
            assert!((sigma * sigma - 1.0).abs() < 1e-9, "var {} at {idx}", sigma * sigma);
        }
    }

    #[test]
    fn assemble_matches_componentwise_oracle() {
        let train =
            vec![track(0, 1, Genre::Pop, 40.0, 180_000.0), track(0, 1, Genre::Pop, 60.0, 220_000.0)];
        let params = fit_standardizer(&train).unwrap();
        let t = track(0, 1, Genre::Pop, params.mu_pop, params.mu_dur);
        let v = assemble(&t, &params).unwrap().0;

        let pi = std::f64::consts::PI;
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], t.instrumentalness);
        assert_eq!(v[3], t.speechiness);
        assert_eq!(v[4], t.valence);
        assert_eq!(v[5], t.loudness);
        assert_eq!(v[6], t.acousticness);
        assert_eq!(v[7], 1.0);
        assert_eq!((v[8], v[9]), (1.0, 0.0)); // key 0
        assert!((v[10] - (pi / 6.0).cos()).abs() < 1e-15); // month 1
        assert!((v[11] - (pi / 6.0).sin()).abs() < 1e-15);
        assert_eq!((v[12], v[13]), (1.0, 0.0)); // January
        assert_eq!(&v[14..], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mode_only_changes_index_seven() {
        let train =
            vec![track(2, 4, Genre::Edm, 40.0, 180_000.0), track(2, 4, Genre::Edm, 60.0, 220_000.0)];
        let params = fit_standardizer(&train).unwrap();
        let a = track(2, 4, Genre::Edm, 50.0, 200_000.0);
        let mut b = a.clone();
        b.mode = 0;
        let va = assemble(&a, &params).unwrap().0;
        let vb = assemble(&b, &params).unwrap().0;
        for i in 0..FEATURE_DIM {
            if i == 7 {
                assert_ne!(va[i], vb[i]);
            } else {
                assert_eq!(va[i], vb[i]);
            }
        }
    }
}
