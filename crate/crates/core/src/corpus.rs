//! Target words, rated contexts and the gold labels derived from them.
//!
//! A corpus file is JSON lines, one context per line:
//!
//! ```text
//! {"id":"c1","word":"ubiquitous","band":7,"snippet":"...","spans":[[12,22]],"ratings":[2,1,1,0]}
//! ```
//!
//! `spans` are byte offsets into `snippet`. When `spans` is absent or empty the
//! loader locates every case-insensitive occurrence of `word` itself. A CSV
//! variant with the same columns is read by [`read_corpus_csv`]; there spans
//! are written `s1-e1;s2-e2` and ratings `2;1;0`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, Result};

pub const MIN_BAND: u8 = 1;
pub const MAX_BAND: u8 = 10;
pub const RATING_VALUES: [i8; 4] = [-1, 0, 1, 2];

/// Typical snippet length in words; outside this range the loader warns.
pub const SNIPPET_WORDS: std::ops::RangeInclusive<usize> = 42..=65;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TargetWord {
    lemma: String,
    band: u8,
}

impl TargetWord {
    pub fn new(lemma: impl Into<String>, band: u8) -> std::result::Result<Self, String> {
        let lemma = lemma.into();
        if lemma.is_empty() {
            return Err("target word is empty".into());
        }
        if !(MIN_BAND..=MAX_BAND).contains(&band) {
            return Err(format!("band {band} outside {MIN_BAND}..={MAX_BAND}"));
        }
        Ok(TargetWord { lemma, band })
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn band(&self) -> u8 {
        self.band
    }
}

/// Half-open byte range `[start, end)` into a snippet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextRecord {
    id: String,
    word: TargetWord,
    snippet: String,
    occurrences: Vec<Span>,
    ratings: Vec<i8>,
    gold: f64,
}

impl ContextRecord {
    /// Builds a record, checking every invariant. An empty `occurrences` list
    /// asks for the occurrences to be located in `snippet`.
    pub fn new(
        id: impl Into<String>,
        word: TargetWord,
        snippet: impl Into<String>,
        occurrences: Vec<Span>,
        ratings: Vec<i8>,
    ) -> std::result::Result<Self, String> {
        let id = id.into();
        let snippet = snippet.into();
        if id.is_empty() {
            return Err("empty id".into());
        }
        let occurrences = if occurrences.is_empty() {
            let found = find_occurrences(&snippet, word.lemma());
            if found.is_empty() {
                return Err(format!(
                    "occurrence not found: '{}' does not appear in the snippet",
                    word.lemma()
                ));
            }
            found
        } else {
            for span in &occurrences {
                check_span(&snippet, word.lemma(), *span)?;
            }
            let mut sorted = occurrences;
            sorted.sort();
            sorted.dedup();
            sorted
        };
        let gold = aggregate_label(&ratings)?;
        Ok(ContextRecord {
            id,
            word,
            snippet,
            occurrences,
            ratings,
            gold,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn word(&self) -> &TargetWord {
        &self.word
    }

    pub fn snippet(&self) -> &str {
        &self.snippet
    }

    pub fn occurrences(&self) -> &[Span] {
        &self.occurrences
    }

    pub fn ratings(&self) -> &[i8] {
        &self.ratings
    }

    pub fn gold(&self) -> f64 {
        self.gold
    }

    pub fn category(&self) -> Category {
        categorize(self.gold)
    }
}

fn check_span(snippet: &str, lemma: &str, span: Span) -> std::result::Result<(), String> {
    if span.is_empty() || span.end > snippet.len() {
        return Err(format!(
            "span {}-{} outside snippet of {} bytes",
            span.start,
            span.end,
            snippet.len()
        ));
    }
    let Some(text) = snippet.get(span.start..span.end) else {
        return Err(format!(
            "span {}-{} does not fall on character boundaries",
            span.start, span.end
        ));
    };
    if text.to_lowercase() != lemma.to_lowercase() {
        return Err(format!(
            "occurrence not found: span {}-{} holds '{}', expected '{}'",
            span.start, span.end, text, lemma
        ));
    }
    Ok(())
}

/// Every non-overlapping case-insensitive occurrence of `lemma` in `snippet`,
/// as byte spans into the original text.
pub fn find_occurrences(snippet: &str, lemma: &str) -> Vec<Span> {
    let needle: Vec<char> = lemma.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() {
        return Vec::new();
    }
    // (byte offset, lowercased char) pairs; a char can lowercase to several.
    let hay: Vec<(usize, char)> = snippet
        .char_indices()
        .flat_map(|(i, c)| c.to_lowercase().map(move |l| (i, l)))
        .collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i + needle.len() <= hay.len() {
        if hay[i..i + needle.len()]
            .iter()
            .zip(&needle)
            .all(|((_, h), n)| h == n)
        {
            let start = hay[i].0;
            let last = hay[i + needle.len() - 1].0;
            let end = last + snippet[last..].chars().next().map_or(0, char::len_utf8);
            let span = Span::new(start, end);
            // Only keep matches that cover whole original characters.
            if snippet
                .get(span.start..span.end)
                .is_some_and(|t| t.to_lowercase() == lemma.to_lowercase())
            {
                spans.push(span);
                i += needle.len();
                continue;
            }
        }
        i += 1;
    }
    spans
}

/// Arithmetic mean of ordinal ratings, each in {-1, 0, 1, 2}.
pub fn aggregate_label(ratings: &[i8]) -> std::result::Result<f64, String> {
    if ratings.is_empty() {
        return Err("no ratings".into());
    }
    if let Some(bad) = ratings.iter().find(|r| !RATING_VALUES.contains(r)) {
        return Err(format!("rating {bad} outside {{-1,0,1,2}}"));
    }
    let sum: i64 = ratings.iter().map(|&r| i64::from(r)).sum();
    Ok(sum as f64 / ratings.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// gold < 0: likely to confuse a learner.
    Misdirective,
    Middle,
    /// gold > 1: likely to teach the word.
    Directive,
}

pub fn categorize(gold: f64) -> Category {
    if gold < 0.0 {
        Category::Misdirective
    } else if gold > 1.0 {
        Category::Directive
    } else {
        Category::Middle
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<ContextRecord>,
    words: Vec<TargetWord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(records: Vec<ContextRecord>) -> std::result::Result<Self, String> {
        let mut index = HashMap::with_capacity(records.len());
        let mut bands: HashMap<&str, u8> = HashMap::new();
        let mut words = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(format!("duplicate context id '{}'", r.id));
            }
            match bands.get(r.word.lemma()) {
                Some(&b) if b != r.word.band() => {
                    return Err(format!(
                        "word '{}' assigned to bands {} and {}",
                        r.word.lemma(),
                        b,
                        r.word.band()
                    ))
                }
                Some(_) => {}
                None => {
                    bands.insert(r.word.lemma(), r.word.band());
                    words.push(r.word.clone());
                }
            }
        }
        Ok(Corpus {
            records,
            words,
            index,
        })
    }

    pub fn records(&self) -> &[ContextRecord] {
        &self.records
    }

    /// Distinct target words in order of first appearance.
    pub fn words(&self) -> &[TargetWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ContextRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id())
    }

    pub fn golds(&self) -> BTreeMap<String, f64> {
        self.records
            .iter()
            .map(|r| (r.id.clone(), r.gold))
            .collect()
    }

    pub fn summarize(&self) -> Result<Summary> {
        summarize(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n_contexts: usize,
    pub n_words: usize,
    /// Word count per band, bands 1..=10 in order.
    pub words_per_band: BTreeMap<u8, usize>,
    pub gold_mean: f64,
    /// Sample (n-1) standard deviation; 0 for a single record.
    pub gold_sd: f64,
    pub frac_misdirective: f64,
    pub frac_directive: f64,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("contexts:           {}\n", self.n_contexts));
        out.push_str(&format!("target words:       {}\n", self.n_words));
        let bands: Vec<String> = self
            .words_per_band
            .iter()
            .map(|(b, n)| format!("{b}:{n}"))
            .collect();
        out.push_str(&format!("words per band:     {}\n", bands.join(" ")));
        out.push_str(&format!(
            "gold mean (sd):     {:.4} ({:.4}, sample sd)\n",
            self.gold_mean, self.gold_sd
        ));
        out.push_str(&format!(
            "misdirective (y<0): {:.4}\n",
            self.frac_misdirective
        ));
        out.push_str(&format!("directive (y>1):    {:.4}\n", self.frac_directive));
        out
    }
}

pub fn summarize(corpus: &Corpus) -> Result<Summary> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot summarize an empty corpus"));
    }
    let n = corpus.len() as f64;
    let golds: Vec<f64> = corpus.records.iter().map(|r| r.gold).collect();
    let mean = golds.iter().sum::<f64>() / n;
    let sd = if golds.len() > 1 {
        (golds.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut words_per_band: BTreeMap<u8, usize> = (MIN_BAND..=MAX_BAND).map(|b| (b, 0)).collect();
    for w in &corpus.words {
        *words_per_band.entry(w.band()).or_default() += 1;
    }
    let count = |c: Category| golds.iter().filter(|&&g| categorize(g) == c).count() as f64;
    Ok(Summary {
        n_contexts: corpus.len(),
        n_words: corpus.words.len(),
        words_per_band,
        gold_mean: mean,
        gold_sd: sd,
        frac_misdirective: count(Category::Misdirective) / n,
        frac_directive: count(Category::Directive) / n,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    id: String,
    word: String,
    band: i64,
    snippet: String,
    #[serde(default)]
    spans: Vec<[usize; 2]>,
    ratings: Vec<i64>,
}

fn record_from_parts(
    id: String,
    word: String,
    band: i64,
    snippet: String,
    spans: Vec<Span>,
    ratings: Vec<i64>,
) -> std::result::Result<ContextRecord, String> {
    let band = u8::try_from(band).map_err(|_| format!("band {band} outside 1..=10"))?;
    let word = TargetWord::new(word, band)?;
    let ratings = ratings
        .into_iter()
        .map(|r| {
            i8::try_from(r)
                .ok()
                .filter(|v| RATING_VALUES.contains(v))
                .ok_or_else(|| format!("rating {r} outside {{-1,0,1,2}}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ContextRecord::new(id, word, snippet, spans, ratings)
}

/// Result of parsing a corpus: the validated corpus plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

fn finish(
    path: &Path,
    records: Vec<(usize, ContextRecord)>,
    mut errors: Vec<LineError>,
) -> Result<LoadedCorpus> {
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (line, r) in &records {
        if !seen.insert(r.id()) {
            errors.push(LineError {
                line: *line,
                message: format!("duplicate context id '{}'", r.id()),
            });
        }
        let n_words = r.snippet().split_whitespace().count();
        if !SNIPPET_WORDS.contains(&n_words) {
            warnings.push(format!(
                "line {line}: snippet '{}' has {n_words} words (expected {}-{})",
                r.id(),
                SNIPPET_WORDS.start(),
                SNIPPET_WORDS.end()
            ));
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(Error::Input {
            path: path.to_path_buf(),
            errors,
        });
    }
    let corpus = Corpus::new(records.into_iter().map(|(_, r)| r).collect()).map_err(|m| {
        Error::Input {
            path: path.to_path_buf(),
            errors: vec![LineError {
                line: 0,
                message: m,
            }],
        }
    })?;
    Ok(LoadedCorpus { corpus, warnings })
}

/// Parses JSON-lines corpus text. `path` only labels error messages.
pub fn read_corpus_jsonl<R: Read>(reader: R, path: &Path) -> Result<LoadedCorpus> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<JsonRow>(&line)
            .map_err(|e| format!("malformed row: {e}"))
            .and_then(|row| {
                record_from_parts(
                    row.id,
                    row.word,
                    row.band,
                    row.snippet,
                    row.spans.iter().map(|s| Span::new(s[0], s[1])).collect(),
                    row.ratings,
                )
            });
        match parsed {
            Ok(r) => records.push((line_no, r)),
            Err(message) => errors.push(LineError {
                line: line_no,
                message,
            }),
        }
    }
    finish(path, records, errors)
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    id: String,
    word: String,
    band: i64,
    snippet: String,
    #[serde(default)]
    spans: String,
    ratings: String,
}

fn parse_csv_spans(s: &str) -> std::result::Result<Vec<Span>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once('-')
                .ok_or_else(|| format!("malformed span '{p}', expected start-end"))?;
            let a = a.trim().parse().map_err(|_| format!("malformed span '{p}'"))?;
            let b = b.trim().parse().map_err(|_| format!("malformed span '{p}'"))?;
            Ok(Span::new(a, b))
        })
        .collect()
}

fn parse_csv_ratings(s: &str) -> std::result::Result<Vec<i64>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("malformed rating '{p}'")))
        .collect()
}

/// Parses the CSV corpus variant (header `id,word,band,snippet,spans,ratings`).
pub fn read_corpus_csv<R: Read>(reader: R, path: &Path) -> Result<LoadedCorpus> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        // header is line 1
        let line_no = i + 2;
        let parsed = row
            .map_err(|e| format!("malformed row: {e}"))
            .and_then(|row| {
                let spans = parse_csv_spans(&row.spans)?;
                let ratings = parse_csv_ratings(&row.ratings)?;
                record_from_parts(row.id, row.word, row.band, row.snippet, spans, ratings)
            });
        match parsed {
            Ok(r) => records.push((line_no, r)),
            Err(message) => errors.push(LineError {
                line: line_no,
                message,
            }),
        }
    }
    finish(path, records, errors)
}

/// Loads a corpus file, choosing the CSV reader for a `.csv` extension and the
/// JSON-lines reader otherwise. Warnings are logged.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let loaded = load_corpus_with_warnings(path)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    Ok(loaded.corpus)
}

pub fn load_corpus_with_warnings(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_corpus_csv(file, path)
    } else {
        read_corpus_jsonl(file, path)
    }
}

/// Writes the corpus in the JSON-lines input format, spans made explicit.
pub fn write_corpus_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for r in corpus.records() {
        let row = JsonRow {
            id: r.id.clone(),
            word: r.word.lemma.clone(),
            band: i64::from(r.word.band),
            snippet: r.snippet.clone(),
            spans: r.occurrences.iter().map(|s| [s.start, s.end]).collect(),
            ratings: r.ratings.iter().map(|&v| i64::from(v)).collect(),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(l: &str, b: u8) -> TargetWord {
        TargetWord::new(l, b).unwrap()
    }

    fn parse(text: &str) -> Result<LoadedCorpus> {
        read_corpus_jsonl(text.as_bytes(), Path::new("mem.jsonl"))
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_label(&[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(aggregate_label(&[2, -1]).unwrap(), 0.5);
        assert_eq!(aggregate_label(&[1; 10]).unwrap(), 1.0);
        assert_eq!(aggregate_label(&[2; 10]).unwrap(), 2.0);
        assert_eq!(aggregate_label(&[-1, 0, 1, 2]).unwrap(), 0.5);
        assert!(aggregate_label(&[]).is_err());
        assert!(aggregate_label(&[3]).is_err());
    }

    #[test]
    fn categorize_boundaries() {
        assert_eq!(categorize(-0.3), Category::Misdirective);
        assert_eq!(categorize(1.4), Category::Directive);
        assert_eq!(categorize(1.0), Category::Middle);
        assert_eq!(categorize(0.0), Category::Middle);
        assert_eq!(categorize(-1.0), Category::Misdirective);
        assert_eq!(categorize(2.0), Category::Directive);
    }

    #[test]
    fn target_word_validation() {
        assert!(TargetWord::new("", 3).is_err());
        assert!(TargetWord::new("x", 0).is_err());
        assert!(TargetWord::new("x", 11).is_err());
        assert!(TargetWord::new("x", 10).is_ok());
    }

    #[test]
    fn occurrences_are_case_insensitive() {
        let spans = find_occurrences("Dog bites dog. DOGMA", "dog");
        assert_eq!(
            spans,
            vec![Span::new(0, 3), Span::new(10, 13), Span::new(15, 18)]
        );
        assert!(find_occurrences("cat", "dog").is_empty());
    }

    #[test]
    fn explicit_span_must_hold_the_word() {
        let w = word("cat", 1);
        assert!(ContextRecord::new("a", w.clone(), "the cat", vec![Span::new(4, 7)], vec![1]).is_ok());
        let err = ContextRecord::new("a", w.clone(), "the cat", vec![Span::new(0, 3)], vec![1]).unwrap_err();
        assert!(err.contains("occurrence not found"), "{err}");
        assert!(ContextRecord::new("a", w, "the cat", vec![Span::new(4, 70)], vec![1]).is_err());
    }

    #[test]
    fn load_jsonl_examples() {
        let text = r#"{"id":"a","word":"cat","band":1,"snippet":"A cat sat.","spans":[[2,5]],"ratings":[2,2,2,2,2,2,2,2,2,2]}
{"id":"b","word":"cat","band":1,"snippet":"Cat naps.","ratings":[-1,0,1,2]}
"#;
        let loaded = parse(text).unwrap();
        let c = &loaded.corpus;
        assert_eq!(c.len(), 2);
        assert_eq!(c.words().len(), 1);
        assert_eq!(c.get("a").unwrap().gold(), 2.0);
        assert_eq!(c.get("b").unwrap().gold(), 0.5);
        assert_eq!(c.get("b").unwrap().occurrences(), &[Span::new(0, 3)]);
        // short snippets warn but load
        assert_eq!(loaded.warnings.len(), 2);
    }

    #[test]
    fn load_reports_every_bad_line() {
        let text = r#"{"id":"a","word":"cat","band":1,"snippet":"no feline here","ratings":[1]}
not json
{"id":"c","word":"cat","band":1,"snippet":"cat","ratings":[5]}
{"id":"d","word":"cat","band":1,"snippet":"cat","ratings":[1]}
"#;
        let err = parse(text).unwrap_err();
        let Error::Input { errors, .. } = &err else {
            panic!("unexpected {err:?}")
        };
        let lines: Vec<usize> = errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![1, 2, 3]);
        assert!(errors[0].message.contains("occurrence not found"));
        assert!(errors[1].message.contains("malformed row"));
        assert!(errors[2].message.contains("rating 5"));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn duplicate_ids_and_inconsistent_bands_rejected() {
        let dup = r#"{"id":"a","word":"cat","band":1,"snippet":"cat","ratings":[1]}
{"id":"a","word":"cat","band":1,"snippet":"cat","ratings":[1]}"#;
        assert!(parse(dup).is_err());
        let bands = r#"{"id":"a","word":"cat","band":1,"snippet":"cat","ratings":[1]}
{"id":"b","word":"cat","band":2,"snippet":"cat","ratings":[1]}"#;
        assert!(parse(bands).is_err());
    }

    #[test]
    fn csv_loader_matches_jsonl() {
        let csv_text = "id,word,band,snippet,spans,ratings\n\
a,cat,1,\"A cat, a CAT.\",2-5;9-12,2;1\n\
b,dog,4,Dog.,,0;0;-1\n";
        let loaded = read_corpus_csv(csv_text.as_bytes(), Path::new("mem.csv")).unwrap();
        let c = loaded.corpus;
        assert_eq!(c.get("a").unwrap().occurrences(), &[Span::new(2, 5), Span::new(9, 12)]);
        assert_eq!(c.get("a").unwrap().gold(), 1.5);
        assert!((c.get("b").unwrap().gold() + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.get("b").unwrap().word().band(), 4);

        let bad = "id,word,band,snippet,spans,ratings\na,cat,1,cat,0-3,9\n";
        let err = read_corpus_csv(bad.as_bytes(), Path::new("mem.csv")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn jsonl_round_trip() {
        let text = r#"{"id":"a","word":"ubiquitous","band":7,"snippet":"Ubiquitous phones are ubiquitous.","ratings":[2,1,0]}
{"id":"b","word":"cat","band":1,"snippet":"The cat.","ratings":[-1]}
"#;
        let first = parse(text).unwrap().corpus;
        let mut buf = Vec::new();
        write_corpus_jsonl(&first, &mut buf).unwrap();
        let second = parse(std::str::from_utf8(&buf).unwrap()).unwrap().corpus;
        assert_eq!(first, second);
    }

    #[test]
    fn summary_examples() {
        let rec = |id: &str, ratings: Vec<i8>| {
            ContextRecord::new(id, word("cat", 2), "cat", vec![], ratings).unwrap()
        };
        let one = Corpus::new(vec![rec("a", vec![2, -1])]).unwrap();
        let s = one.summarize().unwrap();
        assert_eq!((s.gold_mean, s.gold_sd), (0.5, 0.0));

        let two = Corpus::new(vec![rec("a", vec![0]), rec("b", vec![1])]).unwrap();
        let s = two.summarize().unwrap();
        assert_eq!(s.gold_mean, 0.5);
        assert!((s.gold_sd - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.words_per_band[&2], 1);
        assert_eq!(s.words_per_band[&1], 0);

        let records: Vec<_> = (0..100)
            .map(|i| rec(&format!("r{i}"), if i < 15 { vec![-1] } else if i < 40 { vec![2] } else { vec![1] }))
            .collect();
        let s = Corpus::new(records).unwrap().summarize().unwrap();
        assert!((s.frac_misdirective - 0.15).abs() < 1e-12);
        assert!((s.frac_directive - 0.25).abs() < 1e-12);
        assert!(s.render().contains("sample sd"));

        assert!(Corpus::new(vec![]).unwrap().summarize().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn aggregate_is_permutation_invariant(
                ratings in prop::collection::vec(prop::sample::select(RATING_VALUES.to_vec()), 1..20),
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut shuffled = ratings.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = aggregate_label(&ratings).unwrap();
                let b = aggregate_label(&shuffled).unwrap();
                prop_assert_eq!(a, b);
                prop_assert!((-1.0..=2.0).contains(&a));
            }

            #[test]
            fn categories_partition_the_label_range(gold in -1.0f64..=2.0) {
                let c = categorize(gold);
                let hits = [gold < 0.0, (0.0..=1.0).contains(&gold), gold > 1.0];
                prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
                prop_assert_eq!(c == Category::Middle, hits[1]);
            }
        }
    }
}
