//! Attribute schema, seed profiles and the generation config file.
//!
//! The config file is TOML with a `version` key. Relative paths inside it are
//! resolved against the working directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::louvain::NUM_COMMUNITIES;

pub const CONFIG_VERSION: u32 = 1;
const PROPORTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    /// Static user trait, emitted before `numfriends` in the user file.
    Demographic,
    /// Like/interest column, emitted after `numfriends`.
    Like,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeValue {
    pub label: String,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    /// Column header in the user records file.
    pub column: String,
    pub kind: AttributeKind,
    #[serde(default)]
    pub description: String,
    pub values: Vec<AttributeValue>,
}

impl Attribute {
    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v.label == label)
    }

    pub fn proportions(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.proportion).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Attribute indices in user-file column order: demographics, then likes.
    pub fn column_order(&self) -> (Vec<usize>, Vec<usize>) {
        let pick = |kind| {
            (0..self.len())
                .filter(|&i| self.attributes[i].kind == kind)
                .collect::<Vec<_>>()
        };
        (pick(AttributeKind::Demographic), pick(AttributeKind::Like))
    }
}

impl Default for AttributeSchema {
    fn default() -> Self {
        use AttributeKind::{Demographic, Like};
        let attr =
            |name: &str, column: &str, kind, description: &str, values: &[(&str, f64)]| Attribute {
                name: name.into(),
                column: column.into(),
                kind,
                description: description.into(),
                values: values
                    .iter()
                    .map(|&(label, proportion)| AttributeValue {
                        label: label.into(),
                        proportion,
                    })
                    .collect(),
            };
        AttributeSchema {
            attributes: vec![
                attr(
                    "Age",
                    "age",
                    Demographic,
                    "Age range in years",
                    &[
                        ("18-25", 0.25),
                        ("26-35", 0.25),
                        ("36-45", 0.18),
                        ("46-55", 0.08),
                        ("56-65", 0.10),
                        ("66-75", 0.06),
                        ("76-85", 0.08),
                    ],
                ),
                attr(
                    "Gender",
                    "gender",
                    Demographic,
                    "Gender",
                    &[("Male", 0.5), ("Female", 0.5)],
                ),
                attr(
                    "Residence",
                    "residence",
                    Demographic,
                    "Town of residence",
                    &[
                        ("PaloAlto", 0.10),
                        ("SantaBarbara", 0.20),
                        ("Winthrop", 0.18),
                        ("Boston", 0.18),
                        ("Cambridge", 0.18),
                        ("SanJose", 0.16),
                    ],
                ),
                attr(
                    "Religion",
                    "religion",
                    Demographic,
                    "Religious affiliation",
                    &[
                        ("Buddhist", 0.18),
                        ("Christian", 0.20),
                        ("Hindu", 0.22),
                        ("Jewish", 0.08),
                        ("Muslim", 0.08),
                        ("Sikh", 0.02),
                        ("TraditionalSpirituality", 0.0),
                        ("OtherReligion", 0.0),
                        ("NoReligiousAffiliation", 0.22),
                    ],
                ),
                attr(
                    "Marital",
                    "maritalstatus",
                    Demographic,
                    "Marital status",
                    &[
                        ("Single", 0.35),
                        ("Married", 0.35),
                        ("Divorced", 0.14),
                        ("Widowed", 0.16),
                    ],
                ),
                attr(
                    "Profession",
                    "profession",
                    Demographic,
                    "Occupation group",
                    &[
                        ("Manager", 0.08),
                        ("Professional", 0.20),
                        ("Service", 0.08),
                        ("Salesandoffice", 0.30),
                        ("NaturalResourcesConstructionAndMaintenance", 0.02),
                        ("ProductionTransportationAndMaterialMoving", 0.04),
                        ("Student", 0.28),
                    ],
                ),
                attr(
                    "Political",
                    "politicalorientation",
                    Demographic,
                    "Political orientation",
                    &[
                        ("FarLeft", 0.08),
                        ("Left", 0.18),
                        ("CenterLeft", 0.12),
                        ("Center", 0.26),
                        ("CenterRight", 0.16),
                        ("Right", 0.16),
                        ("FarRight", 0.04),
                    ],
                ),
                attr(
                    "Sexuality",
                    "sexualorientation",
                    Demographic,
                    "Sexual orientation",
                    &[
                        ("Asexual", 0.03),
                        ("Bisexual", 0.05),
                        ("Heterosexual", 0.87),
                        ("Homosexual", 0.05),
                    ],
                ),
                attr(
                    "Like1",
                    "like1",
                    Like,
                    "First like",
                    &[
                        ("Entertainment", 0.35),
                        ("Music Artist", 0.20),
                        ("Drink Brand", 0.12),
                        ("TV Show", 0.33),
                    ],
                ),
                attr(
                    "Like2",
                    "like2",
                    Like,
                    "Second like",
                    &[
                        ("Entertainment", 0.30),
                        ("Music Artist", 0.30),
                        ("TV Show", 0.25),
                        ("Drink Brand", 0.15),
                    ],
                ),
                attr(
                    "Like3",
                    "like3",
                    Like,
                    "Third like",
                    &[
                        ("Music Artist", 0.15),
                        ("Entertainment", 0.20),
                        ("Drink Brand", 0.33),
                        ("Soccer Club", 0.32),
                    ],
                ),
            ],
        }
    }
}

/// A prototype individual: one value label per attribute name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub id: usize,
    pub choice: BTreeMap<String, String>,
}

impl Profile {
    /// Value index per schema attribute; `None` if any choice is missing or unknown.
    pub fn resolve(&self, schema: &AttributeSchema) -> Option<Vec<usize>> {
        schema
            .attributes
            .iter()
            .map(|a| self.choice.get(&a.name).and_then(|l| a.value_index(l)))
            .collect()
    }
}

/// Illustrative default profiles. Profiles 2 and 5 carry the young/Palo Alto
/// and older/San Jose traits the demo data is known for; the rest are filler.
pub fn default_profiles(schema: &AttributeSchema) -> Vec<Profile> {
    const ROWS: [[&str; 11]; 10] = [
        [
            "36-45",
            "Female",
            "Boston",
            "Christian",
            "Married",
            "Professional",
            "Center",
            "Heterosexual",
            "TV Show",
            "Entertainment",
            "Drink Brand",
        ],
        [
            "26-35",
            "Female",
            "Cambridge",
            "Buddhist",
            "Single",
            "Salesandoffice",
            "CenterLeft",
            "Heterosexual",
            "Entertainment",
            "TV Show",
            "Soccer Club",
        ],
        [
            "18-25",
            "Male",
            "PaloAlto",
            "Christian",
            "Single",
            "Student",
            "CenterLeft",
            "Heterosexual",
            "Drink Brand",
            "Drink Brand",
            "Entertainment",
        ],
        [
            "46-55",
            "Male",
            "Winthrop",
            "Hindu",
            "Married",
            "Manager",
            "CenterRight",
            "Heterosexual",
            "Music Artist",
            "Music Artist",
            "Drink Brand",
        ],
        [
            "56-65",
            "Female",
            "SantaBarbara",
            "NoReligiousAffiliation",
            "Divorced",
            "Service",
            "Left",
            "Bisexual",
            "TV Show",
            "Music Artist",
            "Soccer Club",
        ],
        [
            "66-75",
            "Female",
            "SanJose",
            "Jewish",
            "Married",
            "Professional",
            "FarLeft",
            "Heterosexual",
            "Entertainment",
            "TV Show",
            "Entertainment",
        ],
        [
            "18-25",
            "Female",
            "Winthrop",
            "Muslim",
            "Single",
            "Professional",
            "CenterRight",
            "Heterosexual",
            "Music Artist",
            "TV Show",
            "Soccer Club",
        ],
        [
            "76-85",
            "Male",
            "Boston",
            "Christian",
            "Widowed",
            "Manager",
            "Right",
            "Heterosexual",
            "TV Show",
            "Entertainment",
            "Music Artist",
        ],
        [
            "26-35",
            "Male",
            "SantaBarbara",
            "Hindu",
            "Single",
            "Salesandoffice",
            "Center",
            "Homosexual",
            "Entertainment",
            "Entertainment",
            "Soccer Club",
        ],
        [
            "36-45",
            "Male",
            "Cambridge",
            "Sikh",
            "Married",
            "ProductionTransportationAndMaterialMoving",
            "Right",
            "Heterosexual",
            "Drink Brand",
            "Drink Brand",
            "Drink Brand",
        ],
    ];
    ROWS.iter()
        .enumerate()
        .map(|(id, row)| Profile {
            id,
            choice: schema
                .attributes
                .iter()
                .zip(row.iter())
                .map(|(a, v)| (a.name.clone(), (*v).to_string()))
                .collect(),
        })
        .collect()
}

/// Community id (index) to profile id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileCommunityAssignment(pub Vec<usize>);

impl ProfileCommunityAssignment {
    pub fn profile_for(&self, community: usize) -> Option<usize> {
        self.0.get(community).copied()
    }
}

impl Default for ProfileCommunityAssignment {
    fn default() -> Self {
        ProfileCommunityAssignment(vec![0, 2, 1, 3, 5, 4, 7, 8, 6, 9])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Randomness {
    #[default]
    Low,
    Medium,
    High,
}

impl Randomness {
    /// Diversity probability `p`.
    pub fn diversity(self) -> f64 {
        match self {
            Randomness::Low => 0.3,
            Randomness::Medium => 0.5,
            Randomness::High => 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeederSettings {
    /// Randomized tries per seed-count level before the count is reduced.
    pub tries: usize,
    /// Candidate draws allowed per try, as a multiple of the seed count.
    pub iterations_per_seed: usize,
    /// Tolerance on the histogram distance between seed neighbourhoods and the graph.
    pub delta: f64,
    /// Seed sets drawn while looking for one within `delta`.
    pub compliance_attempts: usize,
}

impl Default for SeederSettings {
    fn default() -> Self {
        SeederSettings {
            tries: 10,
            iterations_per_seed: 100,
            delta: 0.05,
            compliance_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub graph: PathBuf,
    pub communities: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            graph: PathBuf::from("resources/Default_files/1kby10k.csv"),
            communities: PathBuf::from("resources/Default_files/1kby10kcommunities.csv"),
            output_dir: PathBuf::from("resources/Output_files"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub version: u32,
    pub rng_seed: u64,
    pub seeds_percent: f64,
    pub randomness: Randomness,
    /// Explicit diversity probability; overrides `randomness` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diversity: Option<f64>,
    /// Share of `YES` in the `classvalue` column.
    pub class_yes_proportion: f64,
    #[serde(default)]
    pub seeder: SeederSettings,
    pub paths: Paths,
    pub schema: AttributeSchema,
    pub profiles: Vec<Profile>,
    pub assignment: ProfileCommunityAssignment,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let schema = AttributeSchema::default();
        GenerationConfig {
            version: CONFIG_VERSION,
            rng_seed: 1,
            seeds_percent: 11.0,
            randomness: Randomness::Low,
            diversity: None,
            class_yes_proportion: 0.3,
            seeder: SeederSettings::default(),
            paths: Paths::default(),
            profiles: default_profiles(&schema),
            schema,
            assignment: ProfileCommunityAssignment::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

impl GenerationConfig {
    pub fn diversity(&self) -> f64 {
        self.diversity
            .unwrap_or_else(|| self.randomness.diversity())
    }

    /// Profile value indices per community, once the config validates.
    pub fn community_profiles(&self) -> Result<Vec<Vec<usize>>> {
        (0..NUM_COMMUNITIES)
            .map(|c| {
                let pid = self.assignment.profile_for(c).ok_or_else(|| {
                    Error::Config(format!("community {c} has no profile assigned"))
                })?;
                let profile = self
                    .profiles
                    .iter()
                    .find(|p| p.id == pid)
                    .ok_or_else(|| Error::Config(format!("profile {pid} is not defined")))?;
                profile
                    .resolve(&self.schema)
                    .ok_or_else(|| Error::Config(format!("profile {pid} is incomplete")))
            })
            .collect()
    }

    /// Every constraint violation; empty means the config can be run.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |subject: String, message: String| out.push(Violation { subject, message });

        if self.version != CONFIG_VERSION {
            push(
                "version".into(),
                format!("unsupported version {}", self.version),
            );
        }
        if !(self.seeds_percent > 0.0 && self.seeds_percent <= 50.0) {
            push(
                "seeds_percent".into(),
                format!("{} is outside (0, 50]", self.seeds_percent),
            );
        }
        if let Some(p) = self.diversity {
            if !(0.0..=1.0).contains(&p) {
                push("diversity".into(), format!("{p} is outside [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.class_yes_proportion) {
            push(
                "class_yes_proportion".into(),
                format!("{} is outside [0, 1]", self.class_yes_proportion),
            );
        }
        if !(0.0..=1.0).contains(&self.seeder.delta) {
            push(
                "seeder.delta".into(),
                format!("{} is outside [0, 1]", self.seeder.delta),
            );
        }
        if self.seeder.tries == 0 || self.seeder.compliance_attempts == 0 {
            push(
                "seeder".into(),
                "tries and compliance_attempts must be positive".into(),
            );
        }

        if self.schema.is_empty() {
            push("schema".into(), "no attributes defined".into());
        }
        let mut names = HashSet::new();
        for attr in &self.schema.attributes {
            if !names.insert(attr.name.as_str()) {
                push(attr.name.clone(), "duplicate attribute name".into());
            }
            if attr.values.is_empty() {
                push(attr.name.clone(), "no values defined".into());
                continue;
            }
            let mut labels = HashSet::new();
            for v in &attr.values {
                if !labels.insert(v.label.as_str()) {
                    push(attr.name.clone(), format!("duplicate value {:?}", v.label));
                }
                if !(0.0..=1.0).contains(&v.proportion) {
                    push(
                        attr.name.clone(),
                        format!(
                            "proportion {} of {:?} is outside [0, 1]",
                            v.proportion, v.label
                        ),
                    );
                }
            }
            let sum: f64 = attr.values.iter().map(|v| v.proportion).sum();
            if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
                push(
                    attr.name.clone(),
                    format!("proportions sum to {sum}, expected 1.0"),
                );
            }
        }

        let mut ids = HashSet::new();
        for profile in &self.profiles {
            let subject = format!("profile {}", profile.id);
            if profile.id >= NUM_COMMUNITIES {
                push(
                    subject.clone(),
                    format!("id must be below {NUM_COMMUNITIES}"),
                );
            }
            if !ids.insert(profile.id) {
                push(subject.clone(), "duplicate profile id".into());
            }
            for attr in &self.schema.attributes {
                match profile.choice.get(&attr.name) {
                    None => push(
                        subject.clone(),
                        format!("missing value for attribute {}", attr.name),
                    ),
                    Some(label) if attr.value_index(label).is_none() => push(
                        subject.clone(),
                        format!("value {label:?} is not defined for attribute {}", attr.name),
                    ),
                    Some(_) => {}
                }
            }
            for name in profile.choice.keys() {
                if self.schema.index_of(name).is_none() {
                    push(subject.clone(), format!("unknown attribute {name}"));
                }
            }
        }
        if self.profiles.len() != NUM_COMMUNITIES {
            push(
                "profiles".into(),
                format!(
                    "expected {NUM_COMMUNITIES} profiles, found {}",
                    self.profiles.len()
                ),
            );
        }

        if self.assignment.0.len() != NUM_COMMUNITIES {
            push(
                "assignment".into(),
                format!(
                    "expected one profile per community ({NUM_COMMUNITIES}), found {}",
                    self.assignment.0.len()
                ),
            );
        }
        for (community, &pid) in self.assignment.0.iter().enumerate() {
            if !ids.contains(&pid) {
                push(
                    format!("assignment[{community}]"),
                    format!("profile {pid} is not defined"),
                );
            }
        }
        out
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::ConfigFormat(e.to_string()))
    }

    /// Parse a config document. Structural problems (syntax, missing keys,
    /// duplicate attribute names) fail here; value constraints are left to
    /// [`GenerationConfig::validate`].
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: GenerationConfig =
            toml::from_str(text).map_err(|e| Error::ConfigFormat(e.to_string()))?;
        let mut seen = HashSet::new();
        for attr in &config.schema.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::ConfigFormat(format!(
                    "duplicate attribute name {:?}",
                    attr.name
                )));
            }
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GenerationConfig::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}
