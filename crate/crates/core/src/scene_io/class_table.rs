use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = u8;

/// Reserved id for pixels with no (or a filtered-out) class.
pub const VOID: ClassId = 255;

const DEFAULT_TABLE: &str = include_str!("../../data/classes.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    RailTrack,
    RailRaised,
    TramTrack,
    OtherKept,
    Filtered,
}

impl Category {
    /// Track region categories; their union is what the gauge is measured on.
    pub fn is_track(self) -> bool {
        matches!(self, Category::RailTrack | Category::TramTrack)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
    pub category: Category,
}

/// How a detected object is weighted when it intrudes into a zone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardClass {
    Movable,
    Stationary,
    Unclassified,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    classes: Vec<ClassEntry>,
    #[serde(default)]
    movable: Vec<String>,
    #[serde(default)]
    stationary: Vec<String>,
}

/// Segmentation classes with their roles, plus the detection class names that
/// count as movable or stationary hazards.
#[derive(Clone, Debug)]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
    by_id: Box<[Option<Category>; 256]>,
    movable: BTreeSet<String>,
    stationary: BTreeSet<String>,
}

impl ClassTable {
    pub fn new(
        entries: Vec<ClassEntry>,
        movable: impl IntoIterator<Item = String>,
        stationary: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let mut by_id = Box::new([None; 256]);
        let mut names = BTreeSet::new();
        for e in &entries {
            if e.id == VOID {
                return Err(Error::ClassTable(format!(
                    "class '{}' uses id {VOID}, which is reserved for void",
                    e.name
                )));
            }
            if by_id[e.id as usize].is_some() {
                return Err(Error::ClassTable(format!("duplicate class id {}", e.id)));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::ClassTable(format!("duplicate class name '{}'", e.name)));
            }
            by_id[e.id as usize] = Some(e.category);
        }
        let movable: BTreeSet<String> = movable.into_iter().collect();
        let stationary: BTreeSet<String> = stationary.into_iter().collect();
        if let Some(both) = movable.intersection(&stationary).next() {
            return Err(Error::ClassTable(format!(
                "'{both}' is listed as both movable and stationary"
            )));
        }
        let mut entries = entries;
        entries.sort_by_key(|e| e.id);
        Ok(Self {
            entries,
            by_id,
            movable,
            stationary,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawTable = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "class table".into(),
            source,
        })?;
        Self::new(raw.classes, raw.movable, raw.stationary)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    /// The bundled table: the rail-scene classes with placeholder roles for the
    /// ones whose keep/filter status is a deployment choice.
    pub fn default_table() -> Self {
        Self::from_json_str(DEFAULT_TABLE).expect("bundled class table is valid")
    }

    pub fn to_json(&self) -> String {
        let raw = RawTable {
            classes: self.entries.clone(),
            movable: self.movable.iter().cloned().collect(),
            stationary: self.stationary.iter().cloned().collect(),
        };
        serde_json::to_string_pretty(&raw).expect("class table serializes")
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn category(&self, id: ClassId) -> Option<Category> {
        self.by_id[id as usize]
    }

    /// True for every id a mask may carry, including [`VOID`].
    pub fn contains(&self, id: ClassId) -> bool {
        id == VOID || self.by_id[id as usize].is_some()
    }

    pub fn is_track(&self, id: ClassId) -> bool {
        self.category(id).is_some_and(Category::is_track)
    }

    pub fn is_filtered(&self, id: ClassId) -> bool {
        self.category(id) == Some(Category::Filtered)
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        if id == VOID {
            return Some("void");
        }
        self.entries
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.name.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// Zone assessment needs at least one `rail_track` class to measure on.
    pub fn require_track_class(&self) -> Result<()> {
        if self
            .entries
            .iter()
            .any(|e| e.category == Category::RailTrack)
        {
            Ok(())
        } else {
            Err(Error::NoTrackClass)
        }
    }

    pub fn hazard_class(&self, detection_class: &str) -> HazardClass {
        if self.movable.contains(detection_class) {
            HazardClass::Movable
        } else if self.stationary.contains(detection_class) {
            HazardClass::Stationary
        } else {
            HazardClass::Unclassified
        }
    }

    pub fn movable(&self) -> &BTreeSet<String> {
        &self.movable
    }

    pub fn stationary(&self) -> &BTreeSet<String> {
        &self.stationary
    }
}
