//! Record linkage between the catalog and the chart archive.
//!
//! The two corpora share no identifiers, so normalized title-artist pairs
//! act as correspondence keys. Matching is exact key equality only; the
//! normalization pipeline absorbs the lexical variance (case, accents,
//! punctuation, edition descriptors) that would otherwise split keys.

use std::collections::HashSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::ingest::{ChartEntry, TrackRecord};

/// Edition descriptors stripped from titles before keying.
pub const DEFAULT_DESCRIPTORS: [&str; 6] = [
    "remix",
    "remastered",
    "acoustic version",
    "live version",
    "explicit version",
    "radio edit",
];

/// Normalizes raw title/artist strings into key components.
#[derive(Debug, Clone)]
pub struct Normalizer {
    strip_pattern: regex::Regex,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::new(&DEFAULT_DESCRIPTORS.map(String::from)).unwrap()
    }
}

impl Normalizer {
    pub fn new(descriptors: &[String]) -> Result<Normalizer> {
        let phrases: Vec<String> = descriptors
            .iter()
            .map(|p| p.trim().to_lowercase())
            .filter(|p| !p.is_empty())
            // Phrases may contain spaces; match any whitespace run there.
            .map(|p| {
                let escaped = regex::escape(&p).replace(r"\ ", " ");
                escaped.split_whitespace().collect::<Vec<_>>().join(r"\s+")
            })
            .collect();
        if phrases.is_empty() {
            return Err(Error::InvalidInput("descriptor list is empty".into()));
        }
        let alt = phrases.join("|");
        // Parenthesized, bracketed, or dash-suffixed occurrences only; a bare
        // phrase can be a legitimate title word.
        let pattern = format!(
            r"\(\s*(?:{alt})\s*\)|\[\s*(?:{alt})\s*\]|[-–—]\s*(?:{alt})\s*$"
        );
        let strip_pattern = regex::Regex::new(&pattern)
            .map_err(|e| Error::InvalidInput(format!("bad descriptor pattern: {e}")))?;
        Ok(Normalizer { strip_pattern })
    }

    pub fn from_file(path: &Path) -> Result<Normalizer> {
        let text = std::fs::read_to_string(path)?;
        let phrases: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        Normalizer::new(&phrases)
    }

    /// Lowercase, de-accent, strip edition descriptors, delete punctuation,
    /// collapse whitespace. Idempotent; the output holds only lowercase
    /// letters, digits and single spaces.
    pub fn normalize(&self, raw: &str) -> String {
        let lowered = raw.to_lowercase();
        // Canonical decomposition, then drop the combining marks.
        let deaccented: String = lowered.nfd().filter(|c| !is_combining_mark(*c)).collect();
        let spaced: String = deaccented
            .chars()
            .map(|c| if c.is_whitespace() { ' ' } else { c })
            .collect();

        let mut stripped = spaced;
        loop {
            let next = self.strip_pattern.replace_all(&stripped, "").into_owned();
            if next == stripped {
                break;
            }
            stripped = next;
        }

        let cleaned: String = stripped
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == ' ')
            .collect();
        let mut out = String::with_capacity(cleaned.len());
        for word in cleaned.split_whitespace() {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(word);
        }
        out
    }
}

/// Normalize with the default descriptor list.
pub fn normalize_text(raw: &str) -> String {
    thread_local! {
        static DEFAULT: Normalizer = Normalizer::default();
    }
    DEFAULT.with(|n| n.normalize(raw))
}

/// Normalized title-artist correspondence key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchKey {
    pub norm_title: String,
    pub norm_artist: String,
}

/// `None` when both components normalize to empty: such records carry no
/// usable key and are excluded from linkage.
pub fn make_key(title: &str, artist: &str, normalizer: &Normalizer) -> Option<MatchKey> {
    let norm_title = normalizer.normalize(title);
    let norm_artist = normalizer.normalize(artist);
    if norm_title.is_empty() && norm_artist.is_empty() {
        return None;
    }
    Some(MatchKey { norm_title, norm_artist })
}

#[derive(Debug)]
pub struct LabelOutcome {
    /// One entry per catalog record, in catalog order.
    pub labeled: Vec<(TrackRecord, bool)>,
    pub positive_count: usize,
    /// Catalog indices whose records were unkeyable (labeled negative).
    pub unkeyable: Vec<usize>,
}

/// Label each catalog track by exact key membership in the archive.
pub fn label_tracks(
    catalog: &[TrackRecord],
    archive: &[ChartEntry],
    normalizer: &Normalizer,
) -> LabelOutcome {
    let archive_keys: HashSet<MatchKey> = archive
        .iter()
        .filter_map(|e| make_key(&e.title, &e.artist, normalizer))
        .collect();

    let keys = map_keys(catalog, normalizer);

    let mut labeled = Vec::with_capacity(catalog.len());
    let mut positive_count = 0;
    let mut unkeyable = Vec::new();
    for (i, (record, key)) in catalog.iter().zip(keys).enumerate() {
        let charted = match key {
            Some(k) => archive_keys.contains(&k),
            None => {
                unkeyable.push(i);
                false
            }
        };
        if charted {
            positive_count += 1;
        }
        labeled.push((record.clone(), charted));
    }
    LabelOutcome { labeled, positive_count, unkeyable }
}

#[cfg(feature = "parallel")]
fn map_keys(catalog: &[TrackRecord], normalizer: &Normalizer) -> Vec<Option<MatchKey>> {
    use rayon::prelude::*;
    catalog
        .par_iter()
        .map(|r| make_key(&r.title, &r.artist, normalizer))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_keys(catalog: &[TrackRecord], normalizer: &Normalizer) -> Vec<Option<MatchKey>> {
    catalog
        .iter()
        .map(|r| make_key(&r.title, &r.artist, normalizer))
        .collect()
}

/// Class-balanced dataset: all positives plus an equal-size seeded sample
/// of negatives.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub positives: Vec<TrackRecord>,
    pub negatives: Vec<TrackRecord>,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    /// All records with their labels, positives first.
    pub fn labeled_pairs(&self) -> impl Iterator<Item = (&TrackRecord, bool)> {
        self.positives
            .iter()
            .map(|r| (r, true))
            .chain(self.negatives.iter().map(|r| (r, false)))
    }
}

/// Draw the balanced dataset: keep every positive, sample `|positives|`
/// negatives uniformly without replacement. Deterministic for a fixed seed.
pub fn balance(labeled: &[(TrackRecord, bool)], seed: u64) -> Result<LabeledDataset> {
    let positives: Vec<TrackRecord> =
        labeled.iter().filter(|(_, c)| *c).map(|(r, _)| r.clone()).collect();
    let negative_pool: Vec<&TrackRecord> =
        labeled.iter().filter(|(_, c)| !*c).map(|(r, _)| r).collect();

    if negative_pool.len() < positives.len() {
        return Err(Error::InvalidInput(format!(
            "{} negatives but {} positives: cannot balance by sampling negatives; \
             undersample positives instead",
            negative_pool.len(),
            positives.len()
        )));
    }

    let mut seen = HashSet::new();
    for (r, _) in labeled {
        if !seen.insert(r.track_id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate track_id '{}' in labeled input",
                r.track_id
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked =
        rand::seq::index::sample(&mut rng, negative_pool.len(), positives.len()).into_vec();
    picked.sort_unstable(); // keep catalog order in the output
    let negatives: Vec<TrackRecord> =
        picked.into_iter().map(|i| negative_pool[i].clone()).collect();

    Ok(LabeledDataset { positives, negatives, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use crate::ingest::Genre;

    fn record(id: &str, title: &str, artist: &str) -> TrackRecord {
        TrackRecord {
            track_id: id.into(),
            title: title.into(),
            artist: artist.into(),
            release_date: NaiveDate::from_ymd_opt(2000, 6, 15).unwrap(),
            month_imputed: false,
            genre: Genre::Pop,
            acousticness: 0.1,
            danceability: 0.5,
            energy: 0.5,
            instrumentalness: 0.0,
            liveness: 0.1,
            speechiness: 0.05,
            valence: 0.5,
            loudness: -10.0,
            popularity: 50.0,
            tempo: 100.0,
            mode: 1,
            key: 0,
            duration_ms: 200_000.0,
        }
    }

    fn entry(title: &str, artist: &str) -> ChartEntry {
        ChartEntry {
            chart_date: NaiveDate::from_ymd_opt(2000, 7, 1).unwrap(),
            rank: 10,
            title: title.into(),
            artist: artist.into(),
        }
    }

    #[test]
    fn normalization_handles_accents_and_descriptors() {
        assert_eq!(normalize_text(" Héllo, World (Radio Edit) "), "hello world");
        assert_eq!(normalize_text("Song Name - Remastered"), "song name");
        assert_eq!(normalize_text("abc"), "abc");
    }

    #[test]
    fn normalization_strips_bracketed_and_chained_descriptors() {
        assert_eq!(normalize_text("Track [Remix]"), "track");
        assert_eq!(normalize_text("Track - Remastered - Radio Edit"), "track");
        assert_eq!(normalize_text("Alright (acoustic  version)"), "alright");
    }

    #[test]
    fn bare_descriptor_words_survive() {
        // Only parenthesized/bracketed/dash-suffixed occurrences are editions.
        assert_eq!(normalize_text("The Remix"), "the remix");
    }

    #[test]
    fn normalization_is_idempotent_on_samples() {
        for s in [
            " Héllo, World (Radio Edit) ",
            "ÆØÅ — weird (Remix)",
            "multi   space\ttitle",
            "数字 123 (live version)",
            "",
            "(Remix)",
        ] {
            let once = normalize_text(s);
            assert_eq!(normalize_text(&once), once, "not idempotent for {s:?}");
        }
    }

    #[test]
    fn keys_normalize_both_components() {
        let n = Normalizer::default();
        let key = make_key("Hello (Remix)", "ADELE", &n).unwrap();
        assert_eq!(key.norm_title, "hello");
        assert_eq!(key.norm_artist, "adele");
        assert_eq!(
            make_key("A", "B", &n).unwrap(),
            MatchKey { norm_title: "a".into(), norm_artist: "b".into() }
        );
        assert!(make_key("(Remix)", "", &n).is_none());
    }

    #[test]
    fn labeling_matches_normalized_pairs() {
        let catalog = vec![
            record("1", "Hello (Remix)", "Adèle"),
            record("2", "Other Song", "Nobody"),
        ];
        let archive = vec![entry("HELLO", "Adele"), entry("Something Else", "Anyone")];
        let out = label_tracks(&catalog, &archive, &Normalizer::default());
        assert_eq!(out.positive_count, 1);
        assert!(out.labeled[0].1);
        assert!(!out.labeled[1].1);
    }

    #[test]
    fn labeling_is_monotone_in_archive() {
        let catalog = vec![record("1", "A", "B"), record("2", "C", "D")];
        let small = vec![entry("A", "B")];
        let mut large = small.clone();
        large.push(entry("C", "D"));
        let n = Normalizer::default();
        let before = label_tracks(&catalog, &small, &n);
        let after = label_tracks(&catalog, &large, &n);
        for (b, a) in before.labeled.iter().zip(after.labeled.iter()) {
            assert!(!b.1 || a.1);
        }
    }

    #[test]
    fn balance_keeps_positives_and_samples_negatives() {
        let mut labeled = Vec::new();
        for i in 0..4 {
            labeled.push((record(&format!("p{i}"), "t", "a"), true));
        }
        for i in 0..10 {
            labeled.push((record(&format!("n{i}"), "t", "a"), false));
        }
        let ds = balance(&labeled, 11).unwrap();
        assert_eq!(ds.positives.len(), 4);
        assert_eq!(ds.negatives.len(), 4);

        let again = balance(&labeled, 11).unwrap();
        let ids = |d: &LabeledDataset| {
            d.negatives.iter().map(|r| r.track_id.clone()).collect::<Vec<_>>()
        };
        assert_eq!(ids(&ds), ids(&again));

        let other = balance(&labeled, 12).unwrap();
        assert_eq!(other.negatives.len(), 4);
    }

    #[test]
    fn balance_without_sampling_is_identity() {
        let labeled = vec![
            (record("p1", "t", "a"), true),
            (record("p2", "t", "a"), true),
            (record("n1", "t", "a"), false),
            (record("n2", "t", "a"), false),
        ];
        let ds = balance(&labeled, 0).unwrap();
        assert_eq!(ds.positives.len(), 2);
        assert_eq!(ds.negatives.len(), 2);
        assert_eq!(ds.negatives[0].track_id, "n1");
        assert_eq!(ds.negatives[1].track_id, "n2");
    }

    #[test]
    fn balance_rejects_excess_positives() {
        let labeled = vec![
            (record("p1", "t", "a"), true),
            (record("p2", "t", "a"), true),
            (record("n1", "t", "a"), false),
        ];
        let err = balance(&labeled, 0).unwrap_err();
        assert!(err.to_string().contains("undersample positives"));
    }
}
