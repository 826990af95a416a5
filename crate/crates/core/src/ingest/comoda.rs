use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;

use super::{file_name, read_text, IngestError, LoadReport};
use crate::model::{
    make_dataset, ContextDim, ContextVector, Dataset, GenreId, ItemId, Movie, MovieMeta, Rating,
    RatingRecord, Sex, SourceTag, UserId, UserProfile, MISSING_CODE,
};

/// Genre names in code order: code `k` in a genre column is `COMODA_GENRES[k - 1]`.
pub const COMODA_GENRES: [&str; 22] = [
    "Romance",
    "Adventure",
    "Comedy",
    "Biography",
    "Drama",
    "Horror",
    "Documentary",
    "Mystery",
    "Sci-Fi",
    "Action",
    "War",
    "Sport",
    "Musical",
    "Film-Noir",
    "Animation",
    "History",
    "Thriller",
    "Music",
    "Family",
    "Fantasy",
    "Crime",
    "Western",
];

/// Column names in file order, as written by [`write_comoda`].
pub const COMODA_COLUMNS: [&str; 30] = [
    "userID",
    "itemID",
    "rating",
    "age",
    "sex",
    "city",
    "country",
    "time",
    "daytype",
    "season",
    "location",
    "weather",
    "social",
    "endEmo",
    "dominantEmo",
    "mood",
    "physical",
    "decision",
    "interaction",
    "director",
    "movieCountry",
    "movieLanguage",
    "movieYear",
    "genre1",
    "genre2",
    "genre3",
    "actor1",
    "actor2",
    "actor3",
    "budget",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
}

impl Delimiter {
    fn byte(self) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }
    }

    fn detect(header: &str) -> Option<Self> {
        let tabs = header.matches('\t').count();
        let commas = header.matches(',').count();
        match (tabs, commas) {
            (0, 0) => None,
            (t, c) if t >= c => Some(Delimiter::Tab),
            _ => Some(Delimiter::Comma),
        }
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delimiter::Comma => "comma",
            Delimiter::Tab => "tab",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Col {
    User,
    Item,
    Rating,
    Age,
    Sex,
    City,
    Country,
    Ctx(ContextDim),
    Director,
    MovieCountry,
    Language,
    Year,
    Genre(usize),
    Actor(usize),
    Budget,
    Title,
    Ignored,
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn column(name: &str) -> Option<Col> {
    let n = normalize(name);
    let n = n
        .strip_prefix("users")
        .or_else(|| n.strip_prefix("user"))
        .filter(|s| !s.is_empty() && s != &"id")
        .unwrap_or(&n);
    Some(match n {
        "userid" => Col::User,
        "itemid" | "movieid" => Col::Item,
        "rating" => Col::Rating,
        "age" => Col::Age,
        "sex" | "gender" => Col::Sex,
        "city" => Col::City,
        "country" => Col::Country,
        "director" | "moviedirector" => Col::Director,
        "moviecountry" | "moviescountry" => Col::MovieCountry,
        "movielanguage" | "movieslanguage" | "language" => Col::Language,
        "movieyear" | "moviesyear" | "year" => Col::Year,
        "genre1" => Col::Genre(0),
        "genre2" => Col::Genre(1),
        "genre3" => Col::Genre(2),
        "actor1" => Col::Actor(0),
        "actor2" => Col::Actor(1),
        "actor3" => Col::Actor(2),
        "budget" | "moviebudget" | "moviesbudget" => Col::Budget,
        "title" | "movietitle" => Col::Title,
        "versiondate" => Col::Ignored,
        other => Col::Ctx(ContextDim::from_name(other).ok()?),
    })
}

fn positional() -> Vec<Col> {
    COMODA_COLUMNS
        .iter()
        .map(|c| column(c).expect("canonical column"))
        .collect()
}

/// Loads a CoMoDa-format file. The delimiter (comma or tab) is detected on
/// the first line; a header row maps columns by name.
pub fn load_comoda(path: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    load_comoda_with_report(path).map(|(d, _)| d)
}

pub fn load_comoda_with_report(
    path: impl AsRef<Path>,
) -> Result<(Dataset, LoadReport), IngestError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut report = LoadReport::new(path, "comoda");
    let d = parse_comoda(&text, &file_name(path), &mut report)?;
    Ok((d, report))
}

struct Row<'a> {
    file: &'a str,
    line: usize,
    cells: &'a csv::StringRecord,
    cols: &'a [Col],
}

impl Row<'_> {
    fn get(&self, col: Col) -> Option<&str> {
        self.cols
            .iter()
            .position(|&c| c == col)
            .and_then(|k| self.cells.get(k))
            .map(str::trim)
    }

    fn int(&self, col: Col, what: &str) -> Result<i64, IngestError> {
        let raw = self.get(col).unwrap_or("");
        raw.parse().map_err(|_| {
            IngestError::parse(
                self.file,
                self.line,
                format!("{what} `{raw}` is not an integer"),
            )
        })
    }

    fn text(&self, col: Col) -> Option<String> {
        self.get(col)
            .filter(|s| !s.is_empty() && *s != "-1")
            .map(str::to_string)
    }
}

fn genre_lookup(catalog: &[String], name: &str) -> Option<GenreId> {
    let n = normalize(name);
    catalog
        .iter()
        .position(|g| normalize(g) == n)
        .map(|k| k as GenreId)
}

/// Accumulates catalogs and ratings row by row.
#[derive(Default)]
struct Builder {
    catalog: Vec<String>,
    users: BTreeMap<UserId, UserProfile>,
    movies: BTreeMap<ItemId, Movie>,
    conflicting: BTreeSet<ItemId>,
    ratings: Vec<RatingRecord>,
    seen: HashMap<(UserId, ItemId, ContextVector), usize>,
}

/// Parses CoMoDa text. `file` names the source in errors and warnings.
pub fn parse_comoda(
    text: &str,
    file: &str,
    report: &mut LoadReport,
) -> Result<Dataset, IngestError> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = Delimiter::detect(first)
        .ok_or_else(|| IngestError::parse(file, 1, "cannot detect delimiter (comma or tab)"))?;
    report.delimiter = Some(delimiter);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter.byte())
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut b = Builder {
        catalog: COMODA_GENRES.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    let mut cols: Option<Vec<Col>> = None;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IngestError::parse(file, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if cols.is_none() {
            if record.get(0).unwrap_or("").trim().parse::<i64>().is_ok() {
                report.warn(format!(
                    "{file}: no header row; assuming the standard 30-column order"
                ));
                cols = Some(positional());
            } else {
                cols = Some(header(&record, file, line, report)?);
                continue;
            }
        }
        let cols = cols.as_deref().expect("layout known");
        if record.len() < cols.len() {
            return Err(IngestError::parse(
                file,
                line,
                format!("expected {} fields, got {}", cols.len(), record.len()),
            ));
        }
        b.row(
            &Row {
                file,
                line,
                cells: &record,
                cols,
            },
            report,
        )?;
    }

    for item in &b.conflicting {
        report.warn(format!(
            "{file}: item {item} has conflicting metadata across rows; first row kept"
        ));
    }
    let d = make_dataset(
        b.users.into_values().collect(),
        b.movies.into_values().collect(),
        b.ratings,
        b.catalog,
        SourceTag::Comoda,
    )?;
    report.count(&d);
    Ok(d)
}

fn header(
    record: &csv::StringRecord,
    file: &str,
    line: usize,
    report: &mut LoadReport,
) -> Result<Vec<Col>, IngestError> {
    let mapped: Vec<Col> = record
        .iter()
        .map(|name| {
            column(name).unwrap_or_else(|| {
                report.warn(format!(
                    "{file}:{line}: unknown column `{}` ignored",
                    name.trim()
                ));
                Col::Ignored
            })
        })
        .collect();
    let required = [Col::User, Col::Item, Col::Rating]
        .into_iter()
        .chain(ContextDim::ALL.into_iter().map(Col::Ctx));
    for need in required {
        if !mapped.contains(&need) {
            return Err(IngestError::parse(
                file,
                line,
                format!("missing required column {need:?}"),
            ));
        }
    }
    Ok(mapped)
}

impl Builder {
    fn row(&mut self, row: &Row<'_>, report: &mut LoadReport) -> Result<(), IngestError> {
        let (file, line) = (row.file, row.line);
        let id = |col, what| -> Result<u32, IngestError> {
            let v = row.int(col, what)?;
            u32::try_from(v).ok().filter(|&v| v > 0).ok_or_else(|| {
                IngestError::parse(file, line, format!("{what} {v} must be positive"))
            })
        };
        let user = id(Col::User, "userID")?;
        let item = id(Col::Item, "itemID")?;
        let rating = Rating::new(row.int(Col::Rating, "rating")?)
            .map_err(|e| IngestError::parse(file, line, e.to_string()))?;

        let mut codes = [MISSING_CODE; 12];
        for dim in ContextDim::ALL {
            codes[dim.index()] = row.int(Col::Ctx(dim), dim.name())?;
        }
        let ctx = ContextVector::from_codes(codes)
            .map_err(|e| IngestError::parse(file, line, e.to_string()))?;

        if let Some(prev) = self.seen.insert((user, item, ctx), line) {
            return Err(IngestError::parse(
                file,
                line,
                format!("duplicate of line {prev} (same user, item and context)"),
            ));
        }
        self.ratings
            .push(RatingRecord::new(user, item, rating).with_context(ctx));

        let mut optional_int = |col: Col, what: &str| -> Option<i64> {
            match row.get(col)? {
                "" | "-1" => None,
                raw => match raw.parse() {
                    Ok(v) => Some(v),
                    Err(_) => {
                        report.warn(format!("{file}:{line}: unparseable {what} `{raw}` dropped"));
                        None
                    }
                },
            }
        };
        let age = optional_int(Col::Age, "age").and_then(|a| u32::try_from(a).ok());
        let sex = optional_int(Col::Sex, "sex");
        let year = optional_int(Col::Year, "movieYear").and_then(|y| i32::try_from(y).ok());
        let sex = match sex {
            Some(1) => Some(Sex::Male),
            Some(2) => Some(Sex::Female),
            Some(other) => {
                report.warn(format!("{file}:{line}: sex code {other} dropped"));
                None
            }
            None => None,
        };

        self.users.entry(user).or_insert_with(|| UserProfile {
            user_id: user,
            age,
            sex,
            city: row.text(Col::City),
            country: row.text(Col::Country),
            ..Default::default()
        });

        let mut genres = BTreeSet::new();
        for slot in 0..3 {
            let Some(raw) = row
                .get(Col::Genre(slot))
                .filter(|s| !s.is_empty() && *s != "-1")
            else {
                continue;
            };
            match raw.parse::<i64>() {
                Ok(code) if (1..=COMODA_GENRES.len() as i64).contains(&code) => {
                    genres.insert((code - 1) as GenreId);
                }
                Ok(code) => report.warn(format!(
                    "{file}:{line}: genre code {code} outside 1..=22 dropped"
                )),
                Err(_) => match genre_lookup(&self.catalog, raw) {
                    Some(g) => {
                        genres.insert(g);
                    }
                    None => {
                        report.warn(format!("{file}:{line}: genre `{raw}` added to the catalog"));
                        self.catalog.push(raw.to_string());
                        genres.insert((self.catalog.len() - 1) as GenreId);
                    }
                },
            }
        }
        let meta = MovieMeta {
            director: row.text(Col::Director),
            country: row.text(Col::MovieCountry),
            language: row.text(Col::Language),
            year,
            actors: (0..3).filter_map(|k| row.text(Col::Actor(k))).collect(),
            budget: row.text(Col::Budget),
            ..Default::default()
        };
        match self.movies.get(&item) {
            Some(m) if m.genres != genres || m.meta != meta => {
                self.conflicting.insert(item);
            }
            Some(_) => {}
            None => {
                let title = row
                    .text(Col::Title)
                    .unwrap_or_else(|| format!("item {item}"));
                self.movies.insert(
                    item,
                    Movie {
                        item_id: item,
                        title,
                        genres,
                        meta,
                    },
                );
            }
        }
        Ok(())
    }
}

/// Writes `d` in the 30-column CoMoDa layout with a header row. Genres are
/// written by name, at most three per item; ratings without context get -1
/// in every context column.
pub fn write_comoda(d: &Dataset, w: impl Write, delimiter: Delimiter) -> Result<(), IngestError> {
    let mut out = csv::WriterBuilder::new()
        .delimiter(delimiter.byte())
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let io = |e: csv::Error| IngestError::Io {
        path: "<comoda writer>".into(),
        source: std::io::Error::other(e.to_string()),
    };
    out.write_record(COMODA_COLUMNS).map_err(io)?;
    let missing = |o: &Option<String>| o.clone().unwrap_or_else(|| "-1".into());
    for r in d.ratings() {
        let u = d.user(r.user_id).expect("rating user exists");
        let m = d.movie(r.item_id).expect("rating item exists");
        let mut row: Vec<String> = vec![
            r.user_id.to_string(),
            r.item_id.to_string(),
            r.rating.to_string(),
            u.age.map_or("-1".into(), |a| a.to_string()),
            match u.sex {
                Some(Sex::Male) => "1".into(),
                Some(Sex::Female) => "2".into(),
                None => "-1".into(),
            },
            missing(&u.city),
            missing(&u.country),
        ];
        let codes = r.context.unwrap_or_else(ContextVector::missing).raw_codes();
        row.extend(codes.iter().map(i64::to_string));
        row.extend([
            missing(&m.meta.director),
            missing(&m.meta.country),
            missing(&m.meta.language),
            m.meta.year.map_or("-1".into(), |y| y.to_string()),
        ]);
        let genres: Vec<String> = m
            .genres
            .iter()
            .filter_map(|&g| d.genre_name(g).map(str::to_string))
            .chain(std::iter::repeat("-1".to_string()))
            .take(3)
            .collect();
        row.extend(genres);
        row.extend(
            m.meta
                .actors
                .iter()
                .cloned()
                .chain(std::iter::repeat("-1".to_string()))
                .take(3),
        );
        row.push(missing(&m.meta.budget));
        out.write_record(&row).map_err(io)?;
    }
    out.flush().map_err(|e| IngestError::Io {
        path: "<comoda writer>".into(),
        source: e,
    })
}
