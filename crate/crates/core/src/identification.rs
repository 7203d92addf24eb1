//! Aircraft type lookup by nearest published length.
//!
//! A [`TypeDatabase`] holds codes, full names, and actual lengths in meters.
//! Classification assigns a measured length to the entry whose actual length
//! is closest; exact midpoint ties go to the smaller actual length, and
//! equal-length entries resolve by lexicographically smaller code. Entries
//! keep their declaration order (it drives report and confusion-matrix
//! layout) while a separate index sorted by length serves classification.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TypeDbError {
    #[error("failed to read type database {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("type database line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("type database line {line}: duplicate code {code:?}")]
    DuplicateCode { line: usize, code: String },
    #[error("type database line {line}: length for {code:?} must be positive, got {value}")]
    NonPositiveLength {
        line: usize,
        code: String,
        value: f64,
    },
    #[error("type database has no entries")]
    Empty,
}

/// One aircraft type: short code, full name, and actual length in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct AircraftType {
    pub code: String,
    pub full_name: String,
    pub actual_length_m: f64,
}

/// Built-in type table: code, full name, actual length in meters.
const BUILTIN_TYPES: [(&str, &str, f64); 9] = [
    ("LM100J", "Lockheed-Martin-LM100J", 35.0),
    ("G-280", "GULFSTREAM-G-280", 20.0),
    ("G-550", "GULFSTREAM-G-550", 29.0),
    ("G-650", "GULFSTREAM-G-650", 30.0),
    ("CJ4", "Cessna-Citation CJ4", 16.0),
    ("CM2", "Cessna-Citation M2", 13.0),
    ("Bo787", "Boeing 787-8", 57.0),
    ("A-380", "Airbus A-380", 73.0),
    ("A-320", "Airbus A-320", 38.0),
];

/// Immutable table of aircraft types.
#[derive(Debug, Clone)]
pub struct TypeDatabase {
    entries: Vec<AircraftType>,
    /// Indices into `entries`, ascending by `(actual_length_m, code)`.
    by_length: Vec<usize>,
}

impl TypeDatabase {
    /// The embedded default table.
    pub fn builtin() -> Self {
        let entries = BUILTIN_TYPES
            .iter()
            .map(|&(code, full_name, actual_length_m)| AircraftType {
                code: code.to_string(),
                full_name: full_name.to_string(),
                actual_length_m,
            })
            .collect();
        Self::from_entries(entries).expect("builtin table is valid")
    }

    /// Builds a database from entries in declaration order. Error line
    /// numbers count entries as CSV data rows (the header is line 1).
    pub fn from_entries(entries: Vec<AircraftType>) -> Result<Self, TypeDbError> {
        if entries.is_empty() {
            return Err(TypeDbError::Empty);
        }
        for (i, e) in entries.iter().enumerate() {
            if e.actual_length_m <= 0.0 || !e.actual_length_m.is_finite() {
                return Err(TypeDbError::NonPositiveLength {
                    line: i + 2,
                    code: e.code.clone(),
                    value: e.actual_length_m,
                });
            }
            if entries[..i].iter().any(|p| p.code == e.code) {
                return Err(TypeDbError::DuplicateCode {
                    line: i + 2,
                    code: e.code.clone(),
                });
            }
        }
        let mut by_length: Vec<usize> = (0..entries.len()).collect();
        by_length.sort_by(|&a, &b| {
            entries[a]
                .actual_length_m
                .partial_cmp(&entries[b].actual_length_m)
                .expect("lengths are finite")
                .then_with(|| entries[a].code.cmp(&entries[b].code))
        });
        Ok(Self { entries, by_length })
    }

    /// Parses the CSV form: a mandatory `code,full_name,actual_length_m`
    /// header followed by one entry per line. Accepts LF or CRLF endings.
    pub fn from_csv_str(text: &str) -> Result<Self, TypeDbError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "code,full_name,actual_length_m" => {}
            Some((_, header)) => {
                return Err(TypeDbError::Parse {
                    line: 1,
                    message: format!(
                        "expected header \"code,full_name,actual_length_m\", got {header:?}"
                    ),
                })
            }
            None => return Err(TypeDbError::Empty),
        }
        let mut entries = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(TypeDbError::Parse {
                    line: line_no,
                    message: format!("expected 3 comma-separated fields, got {}", fields.len()),
                });
            }
            let code = fields[0].trim();
            if code.is_empty() {
                return Err(TypeDbError::Parse {
                    line: line_no,
                    message: "empty type code".to_string(),
                });
            }
            let length: f64 = fields[2].trim().parse().map_err(|_| TypeDbError::Parse {
                line: line_no,
                message: format!("cannot parse length {:?}", fields[2].trim()),
            })?;
            if length <= 0.0 || !length.is_finite() {
                return Err(TypeDbError::NonPositiveLength {
                    line: line_no,
                    code: code.to_string(),
                    value: length,
                });
            }
            if entries.iter().any(|e: &AircraftType| e.code == code) {
                return Err(TypeDbError::DuplicateCode {
                    line: line_no,
                    code: code.to_string(),
                });
            }
            entries.push(AircraftType {
                code: code.to_string(),
                full_name: fields[1].trim().to_string(),
                actual_length_m: length,
            });
        }
        if entries.is_empty() {
            return Err(TypeDbError::Empty);
        }
        Self::from_entries(entries)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, TypeDbError> {
        let text = std::fs::read_to_string(path).map_err(|source| TypeDbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text)
    }

    /// Entries in declaration order.
    pub fn entries(&self) -> &[AircraftType] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &str) -> Option<&AircraftType> {
        self.entries.iter().find(|e| e.code == code)
    }

    /// Position of a code in declaration order.
    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.code == code)
    }

    /// The entry whose actual length is nearest to `length_m`. Midpoint ties
    /// go to the smaller actual length, then the lexicographically smaller
    /// code; total for any non-negative finite input.
    pub fn classify_by_length(&self, length_m: f64) -> &AircraftType {
        debug_assert!(length_m >= 0.0 && length_m.is_finite());
        let mut best = &self.entries[self.by_length[0]];
        let mut best_dist = (length_m - best.actual_length_m).abs();
        for &i in &self.by_length[1..] {
            let entry = &self.entries[i];
            let dist = (length_m - entry.actual_length_m).abs();
            // Strict comparison keeps the first (smallest-length, then
            // smallest-code) entry on exact ties.
            if dist < best_dist {
                best = entry;
                best_dist = dist;
            }
        }
        best
    }

    /// The CSV form of this database, matching the accepted input format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,full_name,actual_length_m\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                e.code, e.full_name, e.actual_length_m
            ));
        }
        out
    }
}

impl Default for TypeDatabase {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_matches_the_published_table() {
        let db = TypeDatabase::builtin();
        assert_eq!(db.len(), 9);
        assert_eq!(db.entries()[0].code, "LM100J");
        assert_eq!(db.entries()[0].actual_length_m, 35.0);
        assert_eq!(db.get("A-380").unwrap().actual_length_m, 73.0);
        assert_eq!(db.get("CM2").unwrap().full_name, "Cessna-Citation M2");
    }

    #[test]
    fn exact_lengths_classify_to_their_own_code() {
        let db = TypeDatabase::builtin();
        for e in db.entries() {
            assert_eq!(db.classify_by_length(e.actual_length_m).code, e.code);
        }
    }

    #[test]
    fn nearest_neighbor_cases() {
        let db = TypeDatabase::builtin();
        assert_eq!(db.classify_by_length(35.0).code, "LM100J");
        // 29.4 is 0.4 from G-550 and 0.6 from G-650.
        assert_eq!(db.classify_by_length(29.4).code, "G-550");
        // Exact midpoint between 29 and 30: smaller length wins.
        assert_eq!(db.classify_by_length(29.5).code, "G-550");
        // Zero length is nearest to the smallest entry.
        assert_eq!(db.classify_by_length(0.0).code, "CM2");
    }

    #[test]
    fn equal_length_tie_breaks_by_code() {
        let db = TypeDatabase::from_entries(vec![
            AircraftType {
                code: "ZZZ".into(),
                full_name: "Z".into(),
                actual_length_m: 10.0,
            },
            AircraftType {
                code: "AAA".into(),
                full_name: "A".into(),
                actual_length_m: 10.0,
            },
        ])
        .unwrap();
        assert_eq!(db.classify_by_length(10.0).code, "AAA");
        assert_eq!(db.classify_by_length(500.0).code, "AAA");
    }

    #[test]
    fn csv_round_trip_and_defaults() {
        let db = TypeDatabase::builtin();
        let reparsed = TypeDatabase::from_csv_str(&db.to_csv()).unwrap();
        assert_eq!(reparsed.entries(), db.entries());
    }

    #[test]
    fn csv_accepts_crlf_and_blank_lines() {
        let db = TypeDatabase::from_csv_str("code,full_name,actual_length_m\r\nX,Test,10\r\n\r\n")
            .unwrap();
        assert_eq!(db.len(), 1);
        assert_eq!(db.classify_by_length(999.0).code, "X");
        assert_eq!(db.classify_by_length(0.01).code, "X");
    }

    #[test]
    fn csv_duplicate_code_is_rejected() {
        let err =
            TypeDatabase::from_csv_str("code,full_name,actual_length_m\nX,Test,10\nX,Other,20\n")
                .unwrap_err();
        assert!(matches!(err, TypeDbError::DuplicateCode { line: 3, .. }));
    }

    #[test]
    fn csv_bad_header_and_bad_rows_are_rejected() {
        assert!(matches!(
            TypeDatabase::from_csv_str("code,name,len\nX,Test,10\n"),
            Err(TypeDbError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            TypeDatabase::from_csv_str("code,full_name,actual_length_m\nX,Test\n"),
            Err(TypeDbError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            TypeDatabase::from_csv_str("code,full_name,actual_length_m\nX,Test,-3\n"),
            Err(TypeDbError::NonPositiveLength { line: 2, .. })
        ));
        assert!(matches!(
            TypeDatabase::from_csv_str("code,full_name,actual_length_m\n"),
            Err(TypeDbError::Empty)
        ));
    }

    #[test]
    fn classification_is_shift_invariant() {
        let db = TypeDatabase::builtin();
        let shifted = TypeDatabase::from_entries(
            db.entries()
                .iter()
                .map(|e| AircraftType {
                    code: e.code.clone(),
                    full_name: e.full_name.clone(),
                    actual_length_m: e.actual_length_m + 100.0,
                })
                .collect(),
        )
        .unwrap();
        for q in [0.0, 13.0, 29.5, 36.4, 73.0, 200.0] {
            assert_eq!(
                db.classify_by_length(q).code,
                shifted.classify_by_length(q + 100.0).code
            );
        }
    }

    #[test]
    fn classification_is_monotone_in_length() {
        let db = TypeDatabase::builtin();
        let mut prev = 0.0;
        let mut q = 0.0;
        while q < 100.0 {
            let len = db.classify_by_length(q).actual_length_m;
            assert!(len >= prev, "classified length regressed at query {q}");
            prev = len;
            q += 0.05;
        }
    }
}
