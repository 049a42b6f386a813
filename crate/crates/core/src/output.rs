//! The four tab-separated result files and the run manifest.
//!
//! * `<stem>_out.csv`: one user record per line, highest id first.
//! * `<stem>_outg.csv`: weighted links, each edge once under its higher id.
//! * `<stem>_out1.csv`: value frequencies for ALL and then each community.
//! * `<stem>_out2.csv`: community sizes, highest community id first, no header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{AttributeSchema, GenerationConfig};
use crate::propagator::{FriendCount, RunReport, StageTimings, UserRecord, WeightedEdge};
use crate::stats::{FrequencyTable, Scope};

pub const OUTG_HEADER: &str = "user\tuserf\tlinkweight";
pub const OUT1_HEADER: &str = "community\tattribute\tvalue\tfrequency";

/// `user`, demographic columns, `numfriends`, like columns, then
/// `classvalue`, `auth`, `community`.
pub fn users_header(schema: &AttributeSchema) -> String {
    let (demographic, likes) = schema.column_order();
    let col = |i: &usize| schema.attributes[*i].column.as_str();
    let mut cols = vec!["user"];
    cols.extend(demographic.iter().map(col));
    cols.push("numfriends");
    cols.extend(likes.iter().map(col));
    cols.extend(["classvalue", "auth", "community"]);
    cols.join("\t")
}

/// Six decimals with trailing zeros trimmed.
pub fn format_auth(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn format_users(users: &[UserRecord], schema: &AttributeSchema) -> String {
    let (demographic, likes) = schema.column_order();
    let mut out = users_header(schema);
    out.push('\n');
    let mut order: Vec<&UserRecord> = users.iter().collect();
    order.sort_by_key(|u| std::cmp::Reverse(u.user));
    for u in order {
        let label = |a: &usize| schema.attributes[*a].values[u.values[*a]].label.as_str();
        let mut cols: Vec<String> = vec![u.user.to_string()];
        cols.extend(demographic.iter().map(|a| label(a).to_string()));
        cols.push(u.numfriends.to_string());
        cols.extend(likes.iter().map(|a| label(a).to_string()));
        cols.push(if u.classvalue { "YES" } else { "NO" }.to_string());
        cols.push(format_auth(u.auth));
        cols.push(u.community.to_string());
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(line, format!("bad {what}: {s:?}")))
}

fn check_header(text: &str, expected: &str) -> Result<()> {
    match text.lines().next() {
        Some(h) if h == expected => Ok(()),
        Some(h) => Err(parse_err(1, format!("unexpected header {h:?}"))),
        None => Err(Error::EmptyInput),
    }
}

/// Parse a users file back into records, ascending user id.
pub fn parse_users(text: &str, schema: &AttributeSchema) -> Result<Vec<UserRecord>> {
    check_header(text, &users_header(schema))?;
    let (demographic, likes) = schema.column_order();
    let width = schema.len() + 5;
    let mut users = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != width {
            return Err(parse_err(
                n,
                format!("expected {width} columns, found {}", cols.len()),
            ));
        }
        let mut values = vec![0; schema.len()];
        let value = |a: usize, s: &str| {
            schema.attributes[a].value_index(s).ok_or_else(|| {
                parse_err(
                    n,
                    format!("{}: unknown value {s:?}", schema.attributes[a].name),
                )
            })
        };
        for (k, &a) in demographic.iter().enumerate() {
            values[a] = value(a, cols[1 + k])?;
        }
        let friends = cols[1 + demographic.len()];
        for (k, &a) in likes.iter().enumerate() {
            values[a] = value(a, cols[2 + demographic.len() + k])?;
        }
        let tail = &cols[width - 3..];
        users.push(UserRecord {
            user: field(n, "user id", cols[0])?,
            values,
            numfriends: FriendCount::parse(friends)
                .ok_or_else(|| parse_err(n, format!("bad numfriends: {friends:?}")))?,
            classvalue: match tail[0] {
                "YES" => true,
                "NO" => false,
                other => return Err(parse_err(n, format!("bad classvalue: {other:?}"))),
            },
            auth: field(n, "auth", tail[1])?,
            community: field(n, "community", tail[2])?,
        });
    }
    users.sort_by_key(|u| u.user);
    Ok(users)
}

pub fn format_edges(edges: &[WeightedEdge]) -> String {
    let mut out = String::from(OUTG_HEADER);
    out.push('\n');
    for e in edges {
        out.push_str(&format!("{}\t{}\t{:.2}\n", e.user, e.userf, e.linkweight));
    }
    out
}

pub fn parse_edges(text: &str) -> Result<Vec<WeightedEdge>> {
    check_header(text, OUTG_HEADER)?;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [user, userf, weight] = cols[..] else {
            return Err(parse_err(n, "expected 3 columns"));
        };
        edges.push(WeightedEdge {
            user: field(n, "user", user)?,
            userf: field(n, "userf", userf)?,
            linkweight: field(n, "linkweight", weight)?,
        });
    }
    Ok(edges)
}

pub fn format_frequencies(table: &FrequencyTable) -> String {
    let mut out = String::from(OUT1_HEADER);
    out.push('\n');
    for row in table.rows() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            row.scope,
            row.attribute.to_uppercase(),
            row.value,
            row.frequency
        ));
    }
    out
}

/// Parse a frequency file against the schema that produced it.
pub fn parse_frequencies(text: &str, schema: &AttributeSchema) -> Result<FrequencyTable> {
    check_header(text, OUT1_HEADER)?;
    let mut communities = 0;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [scope, attribute, value, frequency] = cols[..] else {
            return Err(parse_err(n, "expected 4 columns"));
        };
        let scope: Scope = scope
            .parse()
            .map_err(|_| parse_err(n, format!("bad community: {scope:?}")))?;
        if let Scope::Community(c) = scope {
            communities = communities.max(c + 1);
        }
        let a = schema
            .attributes
            .iter()
            .position(|x| x.name.eq_ignore_ascii_case(attribute))
            .ok_or_else(|| parse_err(n, format!("unknown attribute {attribute:?}")))?;
        let v = schema.attributes[a]
            .value_index(value)
            .ok_or_else(|| parse_err(n, format!("unknown value {value:?}")))?;
        rows.push((scope, a, v, field::<usize>(n, "frequency", frequency)?));
    }
    let mut table = FrequencyTable::empty(schema, communities);
    for (scope, a, v, f) in rows {
        table.counts_mut(scope).expect("sized above")[a][v] = f;
    }
    Ok(table)
}

pub fn format_summary(rows: &[(usize, usize)]) -> String {
    rows.iter().map(|(c, n)| format!("{c}\t{n}\n")).collect()
}

pub fn parse_summary(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let Some((c, count)) = line.split_once('\t') else {
            return Err(parse_err(n, "expected 2 columns"));
        };
        rows.push((field(n, "community", c)?, field(n, "count", count)?));
    }
    Ok(rows)
}

/// Paths of one run's result files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub users: PathBuf,
    pub edges: PathBuf,
    pub frequencies: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: impl AsRef<Path>, stem: &str) -> Self {
        let dir = dir.as_ref();
        OutputPaths {
            users: dir.join(format!("{stem}_out.csv")),
            edges: dir.join(format!("{stem}_outg.csv")),
            frequencies: dir.join(format!("{stem}_out1.csv")),
            summary: dir.join(format!("{stem}_out2.csv")),
            manifest: dir.join(format!("{stem}_manifest.json")),
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub rng_seed: u64,
    pub graph: PathBuf,
    pub communities: PathBuf,
    pub outputs: OutputPaths,
    pub report: RunReport,
    pub config: GenerationConfig,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigFormat(e.to_string()))
    }

    /// The manifest with wall-clock timings cleared, for run comparison.
    pub fn without_timings(&self) -> Self {
        let mut m = self.clone();
        m.report.timings = StageTimings::default();
        m
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::graph::fixtures::karate;
    use crate::louvain::tests::KARATE_FOUR;
    use crate::louvain::CommunityLabeling;
    use crate::propagator::generate;
    use crate::stats::{community_summary, frequency_table};

    fn karate_run() -> (
        GenerationConfig,
        CommunityLabeling,
        crate::propagator::Generated,
    ) {
        let k = karate();
        let config = GenerationConfig::default();
        let labeling = CommunityLabeling::from_assignment(&k, KARATE_FOUR.to_vec()).unwrap();
        let out = generate(&k, &labeling, &config, Exec::Sequential).unwrap();
        (config, labeling, out)
    }

    #[test]
    fn default_users_header() {
        let schema = GenerationConfig::default().schema;
        assert_eq!(
            users_header(&schema),
            "user\tage\tgender\tresidence\treligion\tmaritalstatus\tprofession\tpoliticalorientation\tsexualorientation\tnumfriends\tlike1\tlike2\tlike3\tclassvalue\tauth\tcommunity"
        );
    }

    #[test]
    fn auth_trimming() {
        assert_eq!(format_auth(0.083770), "0.08377");
        assert_eq!(format_auth(0.1204191), "0.120419");
        assert_eq!(format_auth(0.0), "0");
        assert_eq!(format_auth(1.0), "1");
        assert_eq!(format_auth(0.0000004), "0");
    }

    #[test]
    fn users_round_trip() {
        let (config, _, out) = karate_run();
        let text = format_users(&out.users, &config.schema);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 35);
        assert!(lines[1].starts_with("33\t"));
        assert!(lines[34].starts_with("0\t"));
        let back = parse_users(&text, &config.schema).unwrap();
        assert_eq!(format_users(&back, &config.schema), text);
        for (a, b) in back.iter().zip(&out.users) {
            assert_eq!(
                (a.user, &a.values, a.community, a.classvalue),
                (b.user, &b.values, b.community, b.classvalue)
            );
            assert!((a.auth - b.auth).abs() <= 5e-7);
        }
    }

    #[test]
    fn edges_round_trip() {
        let (_, _, out) = karate_run();
        let text = format_edges(&out.edges);
        assert!(text.starts_with("user\tuserf\tlinkweight\n33\t"));
        assert!(text
            .lines()
            .skip(1)
            .all(|l| l.rsplit('\t').next().unwrap().len() == 4));
        let back = parse_edges(&text).unwrap();
        assert_eq!(back, out.edges);
    }

    #[test]
    fn frequencies_round_trip() {
        let (config, _, out) = karate_run();
        let table = frequency_table(&out.users, &config.schema);
        let text = format_frequencies(&table);
        assert!(text.starts_with("community\tattribute\tvalue\tfrequency\nALL\tAGE\t18-25\t"));
        assert!(text.contains("\n0\tGENDER\tMale\t"));
        assert!(text.contains("\n9\tLIKE3\tSoccer Club\t0\n"));
        assert_eq!(parse_frequencies(&text, &config.schema).unwrap(), table);
    }

    #[test]
    fn summary_round_trip() {
        let (_, labeling, _) = karate_run();
        let rows = community_summary(&labeling);
        let text = format_summary(&rows);
        assert!(text.starts_with("9\t0\n"));
        assert!(text.ends_with(&format!("0\t{}\n", labeling.sizes()[0])));
        assert_eq!(parse_summary(&text).unwrap(), rows);
    }

    #[test]
    fn bad_lines_report_position() {
        let err = parse_edges("user\tuserf\tlinkweight\n1\t0\t0.5\n2\tx\t0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(matches!(
            parse_edges("nope\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_summary("1\t2\n3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let (config, _, out) = karate_run();
        let m = RunManifest {
            tool_version: "0".into(),
            rng_seed: config.rng_seed,
            graph: "g.csv".into(),
            communities: "c.csv".into(),
            outputs: OutputPaths::new("out", "karate"),
            report: out.report,
            config,
        };
        assert_eq!(m.outputs.edges, PathBuf::from("out/karate_outg.csv"));
        let back = RunManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.without_timings().report.timings,
            StageTimings::default()
        );
    }
}
