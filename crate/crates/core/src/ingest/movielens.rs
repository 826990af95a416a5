use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{file_name, read_text, IngestError, LoadReport};
use crate::model::{
    make_dataset, Dataset, GenreId, Movie, MovieMeta, Rating, RatingRecord, Sex, SourceTag,
    UserProfile,
};

/// Loads an ml-100k style directory: `u.data`, `u.item`, `u.user`, `u.genre`,
/// and `u.info` when present.
pub fn load_movielens(dir: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    load_movielens_with_report(dir).map(|(d, _)| d)
}

pub fn load_movielens_with_report(
    dir: impl AsRef<Path>,
) -> Result<(Dataset, LoadReport), IngestError> {
    let dir = dir.as_ref();
    let mut report = LoadReport::new(dir, "movielens");
    let (users, movies, catalog) = load_catalogs(dir, &mut report)?;
    let ratings = read_ratings_file(dir.join("u.data"))?;
    let d = assemble(users, movies, ratings, catalog, "u.data")?;
    check_info(dir, &d)?;
    report.count(&d);
    Ok((d, report))
}

/// Loads `<name>.base` and `<name>.test` (for example `u1` or `ua`) against
/// the directory's user and item catalogs.
pub fn load_movielens_split(
    dir: impl AsRef<Path>,
    name: &str,
) -> Result<(Dataset, Dataset), IngestError> {
    let dir = dir.as_ref();
    let mut report = LoadReport::new(dir, "movielens");
    let (users, movies, catalog) = load_catalogs(dir, &mut report)?;
    let mut halves = Vec::with_capacity(2);
    for ext in ["base", "test"] {
        let file = format!("{name}.{ext}");
        let ratings = read_ratings_file(dir.join(&file))?;
        halves.push(assemble(
            users.clone(),
            movies.clone(),
            ratings,
            catalog.clone(),
            &file,
        )?);
    }
    let test = halves.pop().expect("two halves");
    let train = halves.pop().expect("two halves");
    Ok((train, test))
}

type Catalogs = (Vec<UserProfile>, Vec<Movie>, Vec<String>);

fn load_catalogs(dir: &Path, report: &mut LoadReport) -> Result<Catalogs, IngestError> {
    let catalog = parse_genres(&dir.join("u.genre"))?;
    let movies = parse_items(&dir.join("u.item"), catalog.len())?;
    let users = parse_users(&dir.join("u.user"), report)?;
    Ok((users, movies, catalog))
}

fn assemble(
    users: Vec<UserProfile>,
    movies: Vec<Movie>,
    ratings: Vec<RatingRecord>,
    catalog: Vec<String>,
    file: &str,
) -> Result<Dataset, IngestError> {
    make_dataset(users, movies, ratings, catalog, SourceTag::Movielens).map_err(|e| {
        IngestError::Integrity {
            file: file.to_string(),
            message: e.to_string(),
        }
    })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_id(file: &str, line: usize, what: &str, raw: &str) -> Result<u32, IngestError> {
    raw.trim()
        .parse::<u32>()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| IngestError::parse(file, line, format!("invalid {what} `{raw}`")))
}

/// Reads a four-column `user item rating timestamp` file (tab or space separated).
pub fn read_ratings_file(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>, IngestError> {
    let path = path.as_ref();
    let file = file_name(path);
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line, l) in lines(&text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(IngestError::parse(
                &file,
                line,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let user = parse_id(&file, line, "user id", fields[0])?;
        let item = parse_id(&file, line, "item id", fields[1])?;
        let rating = fields[2]
            .parse::<i64>()
            .map_err(|_| IngestError::parse(&file, line, format!("invalid rating `{}`", fields[2])))
            .and_then(|r| {
                Rating::new(r).map_err(|e| IngestError::parse(&file, line, e.to_string()))
            })?;
        let ts = fields[3].parse::<i64>().map_err(|_| {
            IngestError::parse(&file, line, format!("invalid timestamp `{}`", fields[3]))
        })?;
        out.push(RatingRecord::new(user, item, rating).with_timestamp(ts));
    }
    Ok(out)
}

fn parse_genres(path: &Path) -> Result<Vec<String>, IngestError> {
    let file = file_name(path);
    let text = read_text(path)?;
    let mut by_index = BTreeMap::new();
    for (line, l) in lines(&text) {
        let (name, idx) = l
            .rsplit_once('|')
            .ok_or_else(|| IngestError::parse(&file, line, "expected `name|index`"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| IngestError::parse(&file, line, format!("invalid genre index `{idx}`")))?;
        if by_index.insert(idx, name.to_string()).is_some() {
            return Err(IngestError::parse(
                &file,
                line,
                format!("genre index {idx} repeated"),
            ));
        }
    }
    if by_index.keys().copied().ne(0..by_index.len()) {
        return Err(IngestError::Integrity {
            file,
            message: "genre indices must run 0..n without gaps".into(),
        });
    }
    Ok(by_index.into_values().collect())
}

fn opt(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn parse_items(path: &Path, n_genres: usize) -> Result<Vec<Movie>, IngestError> {
    let file = file_name(path);
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line, l) in lines(&text) {
        let f: Vec<&str> = l.split('|').collect();
        if f.len() != 5 + n_genres {
            return Err(IngestError::parse(
                &file,
                line,
                format!("expected {} fields, got {}", 5 + n_genres, f.len()),
            ));
        }
        let id = parse_id(&file, line, "item id", f[0])?;
        let mut genres = Vec::new();
        for (g, flag) in f[5..].iter().enumerate() {
            match flag.trim() {
                "0" => {}
                "1" => genres.push(g as GenreId),
                other => {
                    return Err(IngestError::parse(
                        &file,
                        line,
                        format!("genre flag `{other}` is not 0/1"),
                    ))
                }
            }
        }
        let mut movie = Movie::new(id, f[1], genres);
        movie.meta = MovieMeta {
            release_date: opt(f[2]),
            video_release_date: opt(f[3]),
            url: opt(f[4]),
            ..Default::default()
        };
        out.push(movie);
    }
    Ok(out)
}

fn parse_users(path: &Path, report: &mut LoadReport) -> Result<Vec<UserProfile>, IngestError> {
    let file = file_name(path);
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (line, l) in lines(&text) {
        let f: Vec<&str> = l.split('|').collect();
        if f.len() != 5 {
            return Err(IngestError::parse(
                &file,
                line,
                format!("expected 5 fields, got {}", f.len()),
            ));
        }
        let user_id = parse_id(&file, line, "user id", f[0])?;
        let age = match f[1].trim() {
            "" => None,
            a => match a.parse() {
                Ok(a) => Some(a),
                Err(_) => {
                    report.warn(format!("{file}:{line}: unparseable age `{a}` dropped"));
                    None
                }
            },
        };
        let sex = match f[2].trim() {
            "M" => Some(Sex::Male),
            "F" => Some(Sex::Female),
            "" => None,
            s => {
                report.warn(format!("{file}:{line}: unknown sex code `{s}` dropped"));
                None
            }
        };
        out.push(UserProfile {
            user_id,
            age,
            sex,
            occupation: opt(f[3]),
            zip: opt(f[4]),
            ..Default::default()
        });
    }
    Ok(out)
}

fn check_info(dir: &Path, d: &Dataset) -> Result<(), IngestError> {
    let path = dir.join("u.info");
    if !path.exists() {
        return Ok(());
    }
    let text = read_text(&path)?;
    let (users, items, ratings) = d.counts();
    for (line, l) in lines(&text) {
        let mut parts = l.split_whitespace();
        let (Some(n), Some(what)) = (parts.next(), parts.next()) else {
            return Err(IngestError::parse(
                "u.info",
                line,
                "expected `<count> <kind>`",
            ));
        };
        let n: usize = n
            .parse()
            .map_err(|_| IngestError::parse("u.info", line, format!("invalid count `{n}`")))?;
        let actual = match what {
            "users" => users,
            "items" => items,
            "ratings" => ratings,
            _ => continue,
        };
        if n != actual {
            return Err(IngestError::Integrity {
                file: "u.info".into(),
                message: format!("declares {n} {what}, found {actual}"),
            });
        }
    }
    Ok(())
}

/// Writes the ratings as `user\titem\trating\ttimestamp` lines in canonical
/// order. A missing timestamp is written as 0.
pub fn write_ratings(d: &Dataset, mut w: impl Write) -> std::io::Result<()> {
    let mut buf = String::with_capacity(d.ratings().len() * 20);
    for r in d.ratings() {
        let _ = writeln!(
            buf,
            "{}\t{}\t{}\t{}",
            r.user_id,
            r.item_id,
            r.rating,
            r.timestamp.unwrap_or(0)
        );
    }
    w.write_all(buf.as_bytes())
}

fn write_file(path: &Path, content: &str) -> Result<(), IngestError> {
    std::fs::write(path, content).map_err(|e| IngestError::io(path, e))
}

/// Writes `d` as an ml-100k directory (`u.data`, `u.item`, `u.user`,
/// `u.genre`, `u.info`).
pub fn write_movielens(d: &Dataset, dir: impl AsRef<Path>) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;

    let mut data = Vec::new();
    write_ratings(d, &mut data).map_err(|e| IngestError::io(&dir.join("u.data"), e))?;
    std::fs::write(dir.join("u.data"), data)
        .map_err(|e| IngestError::io(&dir.join("u.data"), e))?;

    let n = d.genre_catalog().len();
    let mut item = String::new();
    for m in d.movies() {
        let flags: Vec<&str> = (0..n)
            .map(|g| {
                if m.genres.contains(&(g as GenreId)) {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        let s = |o: &Option<String>| o.clone().unwrap_or_default();
        let _ = writeln!(
            item,
            "{}|{}|{}|{}|{}|{}",
            m.item_id,
            m.title,
            s(&m.meta.release_date),
            s(&m.meta.video_release_date),
            s(&m.meta.url),
            flags.join("|")
        );
    }
    write_file(&dir.join("u.item"), &item)?;

    let mut user = String::new();
    for u in d.users() {
        let sex = match u.sex {
            Some(Sex::Male) => "M",
            Some(Sex::Female) => "F",
            None => "",
        };
        let _ = writeln!(
            user,
            "{}|{}|{}|{}|{}",
            u.user_id,
            u.age.map(|a| a.to_string()).unwrap_or_default(),
            sex,
            u.occupation.clone().unwrap_or_default(),
            u.zip.clone().unwrap_or_default()
        );
    }
    write_file(&dir.join("u.user"), &user)?;

    let mut genre = String::new();
    for (k, name) in d.genre_catalog().iter().enumerate() {
        let _ = writeln!(genre, "{name}|{k}");
    }
    write_file(&dir.join("u.genre"), &genre)?;

    let (nu, ni, nr) = d.counts();
    write_file(
        &dir.join("u.info"),
        &format!("{nu} users\n{ni} items\n{nr} ratings\n"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path) {
        std::fs::write(dir.join("u.genre"), "unknown|0\nAction|1\nComedy|2\n\n").unwrap();
        std::fs::write(
            dir.join("u.item"),
            "1|Toy Story (1995)|01-Jan-1995||http://x|0|1|1\n2|Caf\u{e9} (1990)||||0|0|1\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("u.user"),
            "1|24|M|technician|85711\n2|53|F|other|94043\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("u.data"),
            "1\t1\t5\t874965758\n2\t1\t3\t1\n2\t2\t4\t2\n",
        )
        .unwrap();
    }

    #[test]
    fn parses_small_directory() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let d = load_movielens(dir.path()).unwrap();
        assert_eq!(d.counts(), (2, 2, 3));
        assert_eq!(d.movie(1).unwrap().genres.len(), 2);
        assert_eq!(d.genre_catalog(), &["unknown", "Action", "Comedy"]);
        let first = d.ratings()[0];
        assert_eq!(
            (
                first.user_id,
                first.item_id,
                first.rating.get(),
                first.timestamp
            ),
            (1, 1, 5, Some(874965758))
        );
        assert_eq!(d.user(2).unwrap().sex, Some(Sex::Female));
    }

    #[test]
    fn latin1_titles_decode() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let mut bytes = b"1|Mis".to_vec();
        bytes.push(0xe9);
        bytes.extend_from_slice(b"rables (1995)||||0|0|1\n");
        std::fs::write(dir.path().join("u.item"), bytes).unwrap();
        std::fs::write(dir.path().join("u.data"), "1\t1\t5\t1\n").unwrap();
        let d = load_movielens(dir.path()).unwrap();
        assert_eq!(d.movie(1).unwrap().title, "Mis\u{e9}rables (1995)");
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        std::fs::write(dir.path().join("u.data"), "1\t1\t5\t1\n2\t1\tx\t1\n").unwrap();
        let err = load_movielens(dir.path()).unwrap_err();
        assert!(
            matches!(&err, IngestError::Parse { file, line: 2, .. } if file == "u.data"),
            "{err}"
        );
        std::fs::write(dir.path().join("u.data"), "1\t1\t6\t1\n").unwrap();
        assert!(load_movielens(dir.path())
            .unwrap_err()
            .to_string()
            .contains("u.data:1"));
    }

    #[test]
    fn info_mismatch_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        std::fs::write(dir.path().join("u.info"), "2 users\n2 items\n4 ratings\n").unwrap();
        let err = load_movielens(dir.path()).unwrap_err();
        assert!(matches!(err, IngestError::Integrity { .. }), "{err}");
    }

    #[test]
    fn dangling_item_reported() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        std::fs::write(dir.path().join("u.data"), "1\t99\t5\t1\n").unwrap();
        let err = load_movielens(dir.path()).unwrap_err();
        assert!(err.to_string().contains("unknown item 99"), "{err}");
    }

    #[test]
    fn write_then_reparse_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let d = load_movielens(dir.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        write_movielens(&d, out.path()).unwrap();
        assert_eq!(load_movielens(out.path()).unwrap(), d);
    }

    #[test]
    fn split_files_load_against_catalogs() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        std::fs::write(dir.path().join("u1.base"), "1\t1\t5\t1\n2\t1\t3\t1\n").unwrap();
        std::fs::write(dir.path().join("u1.test"), "2\t2\t4\t2\n").unwrap();
        let (train, test) = load_movielens_split(dir.path(), "u1").unwrap();
        assert_eq!((train.counts().2, test.counts().2), (2, 1));
        assert_eq!(test.counts().1, 2);
    }
}
