//! Parsing and validation of the two input corpora: the track catalog and
//! the weekly chart archive.
//!
//! Parsing is total: every input row becomes either a typed record or a
//! logged rejection, so `accepted + rejected == total`. Out-of-range
//! descriptor values reject the row by default; [`ParseOptions::clamp`]
//! clamps bounded descriptors instead for exploratory runs.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tracks released before this year are outside the corpus.
pub const MIN_RELEASE_YEAR: i32 = 1985;
/// Upper bound on track duration in milliseconds.
pub const MAX_DURATION_MS: f64 = 6.0e5;

/// The six genres present in the catalog, in fixed encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    Pop,
    Rap,
    Rock,
    Latin,
    Edm,
    Rnb,
}

impl Genre {
    pub const ALL: [Genre; 6] = [
        Genre::Pop,
        Genre::Rap,
        Genre::Rock,
        Genre::Latin,
        Genre::Edm,
        Genre::Rnb,
    ];

    pub fn parse(s: &str) -> Option<Genre> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pop" => Some(Genre::Pop),
            "rap" => Some(Genre::Rap),
            "rock" => Some(Genre::Rock),
            "latin" => Some(Genre::Latin),
            "edm" => Some(Genre::Edm),
            "rnb" | "r&b" => Some(Genre::Rnb),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Genre::Pop => "pop",
            Genre::Rap => "rap",
            Genre::Rock => "rock",
            Genre::Latin => "latin",
            Genre::Edm => "edm",
            Genre::Rnb => "rnb",
        }
    }

    /// Position in the one-hot encoding.
    pub fn index(&self) -> usize {
        Genre::ALL.iter().position(|g| g == self).unwrap()
    }
}

/// One catalog row: identity, metadata and the audio/engagement descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: String,
    pub title: String,
    pub artist: String,
    pub release_date: NaiveDate,
    /// Set when the source date carried only a year; such rows are excluded
    /// from seasonal analyses.
    pub month_imputed: bool,
    pub genre: Genre,
    pub acousticness: f64,
    pub danceability: f64,
    pub energy: f64,
    pub instrumentalness: f64,
    pub liveness: f64,
    pub speechiness: f64,
    pub valence: f64,
    /// dBFS, in [-60, 0].
    pub loudness: f64,
    /// Engagement score in [0, 100].
    pub popularity: f64,
    /// Beats per minute, positive.
    pub tempo: f64,
    /// 1 = major, 0 = minor.
    pub mode: u8,
    /// Semitone 0..=11.
    pub key: u8,
    /// Milliseconds, positive and below [`MAX_DURATION_MS`].
    pub duration_ms: f64,
}

impl TrackRecord {
    /// Calendar month of release, 1..=12.
    pub fn release_month(&self) -> u32 {
        self.release_date.month()
    }
}

/// One weekly chart row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub chart_date: NaiveDate,
    /// Position 1..=100.
    pub rank: u32,
    pub title: String,
    pub artist: String,
}

/// Why a row was rejected. Serialized as one JSON line per rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 0-based data row index (header excluded).
    pub row: usize,
    pub field: String,
    pub reason: String,
}

/// Maps the logical catalog fields onto the source file's column names.
/// The defaults are the canonical names this crate writes back out.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogSchema {
    pub track_id: String,
    pub title: String,
    pub artist: String,
    pub release_date: String,
    pub genre: String,
    pub acousticness: String,
    pub danceability: String,
    pub energy: String,
    pub instrumentalness: String,
    pub liveness: String,
    pub speechiness: String,
    pub valence: String,
    pub loudness: String,
    pub popularity: String,
    pub tempo: String,
    pub mode: String,
    pub key: String,
    pub duration_ms: String,
}

impl Default for CatalogSchema {
    fn default() -> Self {
        CatalogSchema {
            track_id: "track_id".into(),
            title: "title".into(),
            artist: "artist".into(),
            release_date: "release_date".into(),
            genre: "genre".into(),
            acousticness: "acousticness".into(),
            danceability: "danceability".into(),
            energy: "energy".into(),
            instrumentalness: "instrumentalness".into(),
            liveness: "liveness".into(),
            speechiness: "speechiness".into(),
            valence: "valence".into(),
            loudness: "loudness".into(),
            popularity: "popularity".into(),
            tempo: "tempo".into(),
            mode: "mode".into(),
            key: "key".into(),
            duration_ms: "duration_ms".into(),
        }
    }
}

impl CatalogSchema {
    pub fn from_json_file(path: &Path) -> Result<CatalogSchema> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn columns(&self) -> [(&'static str, &str); 18] {
        [
            ("track_id", &self.track_id),
            ("title", &self.title),
            ("artist", &self.artist),
            ("release_date", &self.release_date),
            ("genre", &self.genre),
            ("acousticness", &self.acousticness),
            ("danceability", &self.danceability),
            ("energy", &self.energy),
            ("instrumentalness", &self.instrumentalness),
            ("liveness", &self.liveness),
            ("speechiness", &self.speechiness),
            ("valence", &self.valence),
            ("loudness", &self.loudness),
            ("popularity", &self.popularity),
            ("tempo", &self.tempo),
            ("mode", &self.mode),
            ("key", &self.key),
            ("duration_ms", &self.duration_ms),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Clamp out-of-range bounded descriptors ([0,1] confidences, loudness,
    /// popularity) instead of rejecting the row. Key, mode, duration and
    /// date violations always reject.
    pub clamp: bool,
}

#[derive(Debug)]
pub struct CatalogParse {
    pub records: Vec<TrackRecord>,
    pub rejects: Vec<Rejection>,
    pub total_rows: usize,
}

#[derive(Debug)]
pub struct ChartParse {
    pub entries: Vec<ChartEntry>,
    pub rejects: Vec<Rejection>,
    pub total_rows: usize,
}

/// Check every range invariant of a record. Returns an empty list iff the
/// record is valid.
pub fn validate_record(record: &TrackRecord) -> Vec<String> {
    let mut violations = Vec::new();
    let unit = [
        ("acousticness", record.acousticness),
        ("danceability", record.danceability),
        ("energy", record.energy),
        ("instrumentalness", record.instrumentalness),
        ("liveness", record.liveness),
        ("speechiness", record.speechiness),
        ("valence", record.valence),
    ];
    for (name, v) in unit {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            violations.push(format!("{name} out of [0,1]"));
        }
    }
    if !(-60.0..=0.0).contains(&record.loudness) || record.loudness.is_nan() {
        violations.push("loudness out of [-60,0]".to_string());
    }
    if !(0.0..=100.0).contains(&record.popularity) || record.popularity.is_nan() {
        violations.push("popularity out of [0,100]".to_string());
    }
    if !(record.tempo > 0.0) || !record.tempo.is_finite() {
        violations.push("tempo not a positive BPM".to_string());
    }
    if record.mode > 1 {
        violations.push("mode out of {0,1}".to_string());
    }
    if record.key > 11 {
        violations.push("key out of {0..11}".to_string());
    }
    if !(record.duration_ms > 0.0) || !record.duration_ms.is_finite() {
        violations.push("duration not positive".to_string());
    } else if record.duration_ms >= MAX_DURATION_MS {
        violations.push("duration exceeds 6e5 ms".to_string());
    }
    if record.release_date.year() < MIN_RELEASE_YEAR {
        violations.push(format!("release year before {MIN_RELEASE_YEAR}"));
    }
    violations
}

/// Release dates come as ISO-8601 (`YYYY-MM-DD`), reduced `YYYY-MM`, or
/// year-only `YYYY`. Year-only maps to January 1 and is flagged imputed.
fn parse_release_date(raw: &str) -> Option<(NaiveDate, bool)> {
    let raw = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some((d, false));
    }
    if raw.len() == 7 && raw.as_bytes()[4] == b'-' {
        let year: i32 = raw[..4].parse().ok()?;
        let month: u32 = raw[5..].parse().ok()?;
        return NaiveDate::from_ymd_opt(year, month, 1).map(|d| (d, false));
    }
    if raw.len() == 4 {
        let year: i32 = raw.parse().ok()?;
        return NaiveDate::from_ymd_opt(year, 1, 1).map(|d| (d, true));
    }
    None
}

struct ColumnIndex {
    by_field: HashMap<&'static str, usize>,
}

impl ColumnIndex {
    fn resolve(header: &csv::StringRecord, schema: &CatalogSchema) -> Result<ColumnIndex> {
        let mut by_field = HashMap::new();
        for (field, column) in schema.columns() {
            let idx = header
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(column))
                .ok_or_else(|| {
                    Error::Schema(format!("missing required column '{column}' (field {field})"))
                })?;
            by_field.insert(field, idx);
        }
        Ok(ColumnIndex { by_field })
    }

    fn get<'r>(&self, row: &'r csv::StringRecord, field: &'static str) -> &'r str {
        row.get(self.by_field[field]).unwrap_or("")
    }
}

fn clamp_range(v: f64, lo: f64, hi: f64) -> f64 {
    v.clamp(lo, hi)
}

fn parse_row(
    row: &csv::StringRecord,
    cols: &ColumnIndex,
    opts: &ParseOptions,
) -> std::result::Result<TrackRecord, (String, String)> {
    let number = |field: &'static str| -> std::result::Result<f64, (String, String)> {
        let raw = cols.get(row, field).trim();
        raw.parse::<f64>()
            .map_err(|_| (field.to_string(), format!("unparseable numeric cell '{raw}'")))
    };

    let date_raw = cols.get(row, "release_date");
    let (release_date, month_imputed) = parse_release_date(date_raw)
        .ok_or_else(|| ("release_date".to_string(), format!("malformed date '{date_raw}'")))?;

    let genre_raw = cols.get(row, "genre");
    let genre = Genre::parse(genre_raw)
        .ok_or_else(|| ("genre".to_string(), format!("unknown genre '{genre_raw}'")))?;

    let mode_raw = cols.get(row, "mode").trim();
    let mode: u8 = mode_raw
        .parse()
        .map_err(|_| ("mode".to_string(), format!("unparseable mode '{mode_raw}'")))?;
    let key_raw = cols.get(row, "key").trim();
    let key: u8 = key_raw
        .parse()
        .map_err(|_| ("key".to_string(), format!("unparseable key '{key_raw}'")))?;

    let mut record = TrackRecord {
        track_id: cols.get(row, "track_id").trim().to_string(),
        title: cols.get(row, "title").to_string(),
        artist: cols.get(row, "artist").to_string(),
        release_date,
        month_imputed,
        genre,
        acousticness: number("acousticness")?,
        danceability: number("danceability")?,
        energy: number("energy")?,
        instrumentalness: number("instrumentalness")?,
        liveness: number("liveness")?,
        speechiness: number("speechiness")?,
        valence: number("valence")?,
        loudness: number("loudness")?,
        popularity: number("popularity")?,
        tempo: number("tempo")?,
        mode,
        key,
        duration_ms: number("duration_ms")?,
    };

    if opts.clamp {
        record.acousticness = clamp_range(record.acousticness, 0.0, 1.0);
        record.danceability = clamp_range(record.danceability, 0.0, 1.0);
        record.energy = clamp_range(record.energy, 0.0, 1.0);
        record.instrumentalness = clamp_range(record.instrumentalness, 0.0, 1.0);
        record.liveness = clamp_range(record.liveness, 0.0, 1.0);
        record.speechiness = clamp_range(record.speechiness, 0.0, 1.0);
        record.valence = clamp_range(record.valence, 0.0, 1.0);
        record.loudness = clamp_range(record.loudness, -60.0, 0.0);
        record.popularity = clamp_range(record.popularity, 0.0, 100.0);
    }

    let violations = validate_record(&record);
    if let Some(first) = violations.into_iter().next() {
        let field = match first.split_whitespace().next().unwrap_or("record") {
            "duration" => "duration_ms",
            "release" => "release_date",
            other => other,
        };
        return Err((field.to_string(), first));
    }
    Ok(record)
}

/// Parse the track catalog. Fatal on missing columns; per-row failures go
/// to the rejection log.
pub fn parse_catalog(
    path: &Path,
    schema: &CatalogSchema,
    opts: &ParseOptions,
) -> Result<CatalogParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = reader.headers()?.clone();
    let cols = ColumnIndex::resolve(&header, schema)?;

    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let parsed = map_rows(&rows, |row| parse_row(row, &cols, opts));

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (i, outcome) in parsed.into_iter().enumerate() {
        match outcome {
            Ok(rec) => records.push(rec),
            Err((field, reason)) => rejects.push(Rejection { row: i, field, reason }),
        }
    }
    Ok(CatalogParse { records, rejects, total_rows: rows.len() })
}

fn parse_chart_row(
    row: &csv::StringRecord,
    date_i: usize,
    rank_i: usize,
    title_i: usize,
    artist_i: usize,
) -> std::result::Result<ChartEntry, (String, String)> {
    let date_raw = row.get(date_i).unwrap_or("").trim();
    let chart_date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d")
        .map_err(|_| ("date".to_string(), format!("malformed date '{date_raw}'")))?;
    let rank_raw = row.get(rank_i).unwrap_or("").trim();
    let rank: u32 = rank_raw
        .parse()
        .map_err(|_| ("rank".to_string(), format!("unparseable rank '{rank_raw}'")))?;
    if !(1..=100).contains(&rank) {
        return Err(("rank".to_string(), "rank out of [1,100]".to_string()));
    }
    Ok(ChartEntry {
        chart_date,
        rank,
        title: row.get(title_i).unwrap_or("").to_string(),
        artist: row.get(artist_i).unwrap_or("").to_string(),
    })
}

/// Parse the weekly chart archive. Duplicates are preserved: the same song
/// legitimately appears once per charted week.
pub fn parse_chart_archive(path: &Path) -> Result<ChartParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("missing required column '{name}'")))
    };
    let (date_i, rank_i, title_i, artist_i) =
        (find("date")?, find("rank")?, find("title")?, find("artist")?);

    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let parsed = map_rows(&rows, |row| parse_chart_row(row, date_i, rank_i, title_i, artist_i));

    let mut entries = Vec::new();
    let mut rejects = Vec::new();
    for (i, outcome) in parsed.into_iter().enumerate() {
        match outcome {
            Ok(e) => entries.push(e),
            Err((field, reason)) => rejects.push(Rejection { row: i, field, reason }),
        }
    }
    Ok(ChartParse { entries, rejects, total_rows: rows.len() })
}

// Rows are independent; parse in parallel but keep input order.
#[cfg(feature = "parallel")]
fn map_rows<T: Send, F>(rows: &[csv::StringRecord], f: F) -> Vec<T>
where
    F: Fn(&csv::StringRecord) -> T + Send + Sync,
{
    use rayon::prelude::*;
    rows.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_rows<T, F>(rows: &[csv::StringRecord], f: F) -> Vec<T>
where
    F: Fn(&csv::StringRecord) -> T,
{
    rows.iter().map(f).collect()
}

/// Canonical header used for catalog-shaped CSV output.
pub const CANONICAL_HEADER: [&str; 18] = [
    "track_id",
    "title",
    "artist",
    "release_date",
    "genre",
    "acousticness",
    "danceability",
    "energy",
    "instrumentalness",
    "liveness",
    "speechiness",
    "valence",
    "loudness",
    "popularity",
    "tempo",
    "mode",
    "key",
    "duration_ms",
];

pub fn record_to_fields(record: &TrackRecord) -> Vec<String> {
    // Imputed dates round-trip as year-only so the flag survives re-parsing.
    let date = if record.month_imputed {
        format!("{:04}", record.release_date.year())
    } else {
        record.release_date.format("%Y-%m-%d").to_string()
    };
    vec![
        record.track_id.clone(),
        record.title.clone(),
        record.artist.clone(),
        date,
        record.genre.as_str().to_string(),
        record.acousticness.to_string(),
        record.danceability.to_string(),
        record.energy.to_string(),
        record.instrumentalness.to_string(),
        record.liveness.to_string(),
        record.speechiness.to_string(),
        record.valence.to_string(),
        record.loudness.to_string(),
        record.popularity.to_string(),
        record.tempo.to_string(),
        record.mode.to_string(),
        record.key.to_string(),
        record.duration_ms.to_string(),
    ]
}

/// Write records using the canonical schema; re-parsing the file yields the
/// identical records.
pub fn write_tracks_csv(path: &Path, records: &[TrackRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CANONICAL_HEADER)?;
    for record in records {
        writer.write_record(record_to_fields(record))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_chart_csv(path: &Path, entries: &[ChartEntry]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["date", "rank", "title", "artist"])?;
    for e in entries {
        writer.write_record([
            e.chart_date.format("%Y-%m-%d").to_string(),
            e.rank.to_string(),
            e.title.clone(),
            e.artist.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Rejection log: JSON-lines, one `{row, field, reason}` object per line.
pub fn write_rejections(path: &Path, rejects: &[Rejection]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in rejects {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}
