//! MIG geometry: instance placements, legal configurations and allocation diffs.
//!
//! A GPU is modelled as a single axis of `gpc_count` slices. An instance is a
//! contiguous run of slices; a configuration is a set of pairwise disjoint
//! instances. Allocations assign the instances of exactly one configuration to
//! tasks, and two allocations are compared by *physical* identity: the
//! `(slice_start, size)` pairs a task holds, not the slot ids.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Upper bound on slices per device; footprints pack occupancy and start bits
/// into one `u16`.
pub const MAX_SLICES: u8 = 8;

const DEFAULT_A100: &str = include_str!("../data/catalog/a100.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("gpc_count {0} out of range 1..={MAX_SLICES}")]
    GpcCount(u8),
    #[error("catalog declares no configurations")]
    Empty,
    #[error("configuration `{config}`: duplicate id")]
    DuplicateId { config: String },
    #[error("configuration `{config}`: malformed slot `{slot}` (expected size@slice_start)")]
    MalformedSlot { config: String, slot: String },
    #[error("configuration `{config}`: slot {slot} has size out of range 1..={max}")]
    SizeOutOfRange { config: String, slot: String, max: u8 },
    #[error("configuration `{config}`: slot {slot} extends past slice {max}")]
    PastEnd { config: String, slot: String, max: u8 },
    #[error("configuration `{config}`: slots {a} and {b} overlap")]
    Overlap { config: String, a: String, b: String },
    #[error("configuration `{config}`: total size {total} exceeds {max} GPCs")]
    TotalSize { config: String, total: u32, max: u8 },
    #[error("configuration `{config}`: slot {slot} is not allowed by the placement rules")]
    NotPlaceable { config: String, slot: String },
    #[error("configuration `{config}`: has no slots")]
    NoSlots { config: String },
    #[error("placement rule for size {size}: {reason}")]
    BadRule { size: u8, reason: String },
}

/// Physical identity of an instance: where it starts and how many slices it spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub slice_start: u8,
    pub size: u8,
}

impl Placement {
    pub fn new(slice_start: u8, size: u8) -> Self {
        Self { slice_start, size }
    }

    pub fn end(&self) -> u8 {
        self.slice_start + self.size
    }

    /// Bit `i` set for every slice `i` the placement covers.
    pub fn slice_mask(&self) -> u8 {
        (((1u16 << self.size) - 1) << self.slice_start) as u8
    }

    pub fn overlaps(&self, other: &Placement) -> bool {
        self.slice_mask() & other.slice_mask() != 0
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.size, self.slice_start)
    }
}

impl FromStr for Placement {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (size, start) = s.trim().split_once('@').ok_or(())?;
        let size = size.trim().parse::<u8>().map_err(|_| ())?;
        let slice_start = start.trim().parse::<u8>().map_err(|_| ())?;
        Ok(Self { slice_start, size })
    }
}

/// A set of pairwise disjoint placements, packed as `occupancy | starts << 8`.
///
/// Two footprints are equal iff they hold exactly the same `(slice_start, size)`
/// pairs, which is the identity used for reconfiguration detection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Footprint(pub u16);

impl Footprint {
    pub const EMPTY: Footprint = Footprint(0);

    /// Adds a placement; the caller guarantees it is disjoint from the current set.
    pub fn insert(&mut self, p: Placement) {
        debug_assert_eq!(self.occupancy() & p.slice_mask(), 0);
        self.0 |= p.slice_mask() as u16 | (1u16 << (p.slice_start + 8));
    }

    pub fn from_placements<I: IntoIterator<Item = Placement>>(it: I) -> Self {
        let mut fp = Footprint::EMPTY;
        for p in it {
            fp.insert(p);
        }
        fp
    }

    pub fn occupancy(&self) -> u8 {
        (self.0 & 0xff) as u8
    }

    fn starts(&self) -> u8 {
        (self.0 >> 8) as u8
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, p: Placement) -> bool {
        self.placements().any(|q| q == p)
    }

    pub fn instance_count(&self) -> u32 {
        self.starts().count_ones()
    }

    pub fn gpc_count(&self) -> u32 {
        self.occupancy().count_ones()
    }

    /// Decodes the placements in slice order.
    pub fn placements(&self) -> impl Iterator<Item = Placement> + '_ {
        let occ = self.occupancy();
        let starts = self.starts();
        (0..MAX_SLICES).filter(move |i| starts >> i & 1 == 1).map(move |start| {
            let mut end = start + 1;
            while end < MAX_SLICES && occ >> end & 1 == 1 && starts >> end & 1 == 0 {
                end += 1;
            }
            Placement::new(start, end - start)
        })
    }
}

impl fmt::Display for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.placements().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub u8);

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Set of slot ids within one configuration (bit `i` = `SlotId(i)`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotMask(pub u8);

impl SlotMask {
    pub const EMPTY: SlotMask = SlotMask(0);

    pub fn single(id: SlotId) -> Self {
        SlotMask(1 << id.0)
    }

    pub fn from_ids<I: IntoIterator<Item = SlotId>>(ids: I) -> Self {
        SlotMask(ids.into_iter().fold(0u8, |m, id| m | 1 << id.0))
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(&self, id: SlotId) -> bool {
        self.0 >> id.0 & 1 == 1
    }

    pub fn ids(&self) -> impl Iterator<Item = SlotId> + '_ {
        let m = self.0;
        (0..8u8).filter(move |i| m >> i & 1 == 1).map(SlotId)
    }
}

impl Serialize for SlotMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.ids().map(|id| id.0))
    }
}

impl<'de> Deserialize<'de> for SlotMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids = Vec::<u8>::deserialize(d)?;
        if let Some(bad) = ids.iter().find(|&&i| i >= 8) {
            return Err(serde::de::Error::custom(format!("slot id {bad} out of range")));
        }
        Ok(SlotMask::from_ids(ids.into_iter().map(SlotId)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceSlot {
    pub id: SlotId,
    pub size: u8,
    pub slice_start: u8,
}

impl InstanceSlot {
    pub fn placement(&self) -> Placement {
        Placement::new(self.slice_start, self.size)
    }
}

impl fmt::Display for InstanceSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.placement())
    }
}

impl Serialize for InstanceSlot {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("InstanceSlot", 3)?;
        st.serialize_field("id", &self.id.0)?;
        st.serialize_field("size", &self.size)?;
        st.serialize_field("slice_start", &self.slice_start)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigId(pub String);

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConfigId {
    fn from(s: &str) -> Self {
        ConfigId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MigConfiguration {
    pub id: ConfigId,
    pub slots: Vec<InstanceSlot>,
}

impl MigConfiguration {
    pub fn slot(&self, id: SlotId) -> Option<&InstanceSlot> {
        self.slots.get(id.0 as usize)
    }

    pub fn total_size(&self) -> u32 {
        self.slots.iter().map(|s| s.size as u32).sum()
    }

    /// Mask covering every slot of the configuration.
    pub fn all_slots(&self) -> SlotMask {
        SlotMask(((1u16 << self.slots.len()) - 1) as u8)
    }

    /// Physical footprint of a subset of this configuration's slots. Ids beyond
    /// the slot list are ignored.
    pub fn footprint(&self, mask: SlotMask) -> Footprint {
        Footprint::from_placements(mask.ids().filter_map(|id| self.slot(id)).map(|s| s.placement()))
    }

    /// Sizes sorted descending, e.g. `[4, 2, 1]`.
    pub fn size_multiset(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self.slots.iter().map(|s| s.size).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

/// Legal start slices for one instance size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRule {
    pub size: u8,
    pub starts: Vec<u8>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    gpc_count: u8,
    #[serde(default, rename = "rule", skip_serializing_if = "Vec::is_empty")]
    rules: Vec<PlacementRule>,
    #[serde(rename = "configuration")]
    configurations: Vec<ConfigurationDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationDoc {
    id: String,
    slots: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub gpc_count: u8,
    pub configurations: Vec<MigConfiguration>,
    pub rules: Vec<PlacementRule>,
    index: HashMap<ConfigId, usize>,
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.gpc_count == other.gpc_count
            && self.configurations == other.configurations
            && self.rules == other.rules
    }
}

impl Catalog {
    /// Builds a catalog from already-placed configurations, validating every
    /// invariant. `rules` may be empty, in which case placements are unrestricted.
    pub fn new(
        gpc_count: u8,
        configurations: Vec<(String, Vec<Placement>)>,
        rules: Vec<PlacementRule>,
    ) -> Result<Self, CatalogError> {
        if gpc_count == 0 || gpc_count > MAX_SLICES {
            return Err(CatalogError::GpcCount(gpc_count));
        }
        for rule in &rules {
            if rule.size == 0 || rule.size > gpc_count {
                return Err(CatalogError::BadRule { size: rule.size, reason: "size out of range".into() });
            }
            if let Some(s) = rule.starts.iter().find(|&&s| s + rule.size > gpc_count) {
                return Err(CatalogError::BadRule {
                    size: rule.size,
                    reason: format!("start {s} runs past slice {gpc_count}"),
                });
            }
        }
        if configurations.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut index = HashMap::new();
        let mut out = Vec::with_capacity(configurations.len());
        for (id, placements) in configurations {
            let config = id.clone();
            if placements.is_empty() {
                return Err(CatalogError::NoSlots { config });
            }
            if placements.len() > MAX_SLICES as usize {
                return Err(CatalogError::TotalSize {
                    config,
                    total: placements.len() as u32,
                    max: gpc_count,
                });
            }
            for p in &placements {
                if p.size == 0 || p.size > gpc_count {
                    return Err(CatalogError::SizeOutOfRange { config, slot: p.to_string(), max: gpc_count });
                }
                if p.end() > gpc_count {
                    return Err(CatalogError::PastEnd { config, slot: p.to_string(), max: gpc_count });
                }
                if !rules.is_empty()
                    && !rules.iter().any(|r| r.size == p.size && r.starts.contains(&p.slice_start))
                {
                    return Err(CatalogError::NotPlaceable { config, slot: p.to_string() });
                }
            }
            for (i, a) in placements.iter().enumerate() {
                for b in &placements[i + 1..] {
                    if a.overlaps(b) {
                        return Err(CatalogError::Overlap { config, a: a.to_string(), b: b.to_string() });
                    }
                }
            }
            let total: u32 = placements.iter().map(|p| p.size as u32).sum();
            if total > gpc_count as u32 {
                return Err(CatalogError::TotalSize { config, total, max: gpc_count });
            }
            let cid = ConfigId(id);
            if index.insert(cid.clone(), out.len()).is_some() {
                return Err(CatalogError::DuplicateId { config });
            }
            let slots = placements
                .iter()
                .enumerate()
                .map(|(i, p)| InstanceSlot { id: SlotId(i as u8), size: p.size, slice_start: p.slice_start })
                .collect();
            out.push(MigConfiguration { id: cid, slots });
        }
        Ok(Self { gpc_count, configurations: out, rules, index })
    }

    /// The shipped 12-configuration A100 catalog.
    pub fn default_a100() -> Self {
        load_catalog(DEFAULT_A100).expect("embedded catalog is valid")
    }

    pub fn default_a100_source() -> &'static str {
        DEFAULT_A100
    }

    pub fn from_path(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        load_catalog(&text)
    }

    pub fn position(&self, id: &ConfigId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &ConfigId) -> Option<&MigConfiguration> {
        self.position(id).map(|i| &self.configurations[i])
    }

    /// Distinct instance sizes offered by any configuration, ascending.
    pub fn instance_sizes(&self) -> Vec<u8> {
        let mut sizes: Vec<u8> =
            self.configurations.iter().flat_map(|c| c.slots.iter().map(|s| s.size)).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    pub fn largest_instance(&self) -> u8 {
        self.instance_sizes().last().copied().unwrap_or(0)
    }

    /// Serializes back to the catalog file format.
    pub fn to_toml(&self) -> String {
        let doc = CatalogDoc {
            gpc_count: self.gpc_count,
            rules: self.rules.clone(),
            configurations: self
                .configurations
                .iter()
                .map(|c| ConfigurationDoc {
                    id: c.id.0.clone(),
                    slots: c.slots.iter().map(|s| s.placement().to_string()).collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("catalog serializes")
    }
}

/// Parses and validates a catalog document.
pub fn load_catalog(source: &str) -> Result<Catalog, CatalogError> {
    let doc: CatalogDoc = toml::from_str(source).map_err(|e| CatalogError::Parse(e.to_string()))?;
    let mut configs = Vec::with_capacity(doc.configurations.len());
    for c in doc.configurations {
        let mut placements = Vec::with_capacity(c.slots.len());
        for s in &c.slots {
            let p = s
                .parse::<Placement>()
                .map_err(|_| CatalogError::MalformedSlot { config: c.id.clone(), slot: s.clone() })?;
            placements.push(p);
        }
        configs.push((c.id, placements));
    }
    Catalog::new(doc.gpc_count, configs, doc.rules)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Inference,
    Retraining,
}

/// A model's inference or retraining task. Orders inference tasks before
/// retraining tasks, then by model index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId {
    pub kind: TaskKind,
    pub model: usize,
}

impl TaskId {
    pub fn inference(model: usize) -> Self {
        Self { kind: TaskKind::Inference, model }
    }

    pub fn retraining(model: usize) -> Self {
        Self { kind: TaskKind::Retraining, model }
    }

    pub fn is_inference(&self) -> bool {
        self.kind == TaskKind::Inference
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TaskKind::Inference => write!(f, "{}.infer", self.model),
            TaskKind::Retraining => write!(f, "{}.retrain", self.model),
        }
    }
}

impl FromStr for TaskId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (model, kind) = s.split_once('.').ok_or_else(|| format!("bad task id `{s}`"))?;
        let model = model.parse::<usize>().map_err(|_| format!("bad task id `{s}`"))?;
        match kind {
            "infer" => Ok(TaskId::inference(model)),
            "retrain" => Ok(TaskId::retraining(model)),
            _ => Err(format!("bad task id `{s}`")),
        }
    }
}

impl Serialize for TaskId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaskId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One second's task-to-instance assignment. Slots not named under any task are unused.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub second: usize,
    pub configuration: ConfigId,
    pub assignments: BTreeMap<TaskId, SlotMask>,
}

impl Allocation {
    pub fn new(second: usize, configuration: impl Into<ConfigId>) -> Self {
        Self { second, configuration: configuration.into(), assignments: BTreeMap::new() }
    }

    pub fn with(mut self, task: TaskId, slots: &[u8]) -> Self {
        let mask = SlotMask::from_ids(slots.iter().copied().map(SlotId));
        let entry = self.assignments.entry(task).or_default();
        entry.0 |= mask.0;
        self
    }

    pub fn slots_of(&self, task: TaskId) -> SlotMask {
        self.assignments.get(&task).copied().unwrap_or_default()
    }

    pub fn occupied(&self) -> SlotMask {
        SlotMask(self.assignments.values().fold(0, |m, s| m | s.0))
    }

    /// Physical footprint of one task; empty when the configuration is unknown.
    pub fn footprint(&self, catalog: &Catalog, task: TaskId) -> Footprint {
        catalog.get(&self.configuration).map(|c| c.footprint(self.slots_of(task))).unwrap_or_default()
    }

    /// Slices covered by any assigned slot.
    pub fn occupied_slices(&self, catalog: &Catalog) -> u8 {
        catalog.get(&self.configuration).map(|c| c.footprint(self.occupied()).occupancy()).unwrap_or(0)
    }
}

impl From<String> for ConfigId {
    fn from(s: String) -> Self {
        ConfigId(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationViolationKind {
    UnknownConfiguration,
    UnknownSlot,
    InstanceShared,
    RetrainingMultiInstance,
}

impl AllocationViolationKind {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownConfiguration => "unknown-configuration",
            Self::UnknownSlot => "unknown-slot",
            Self::InstanceShared => "instance-shared",
            Self::RetrainingMultiInstance => "retraining-multi-instance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AllocationViolation {
    pub kind: AllocationViolationKind,
    pub task: Option<TaskId>,
    pub detail: String,
}

/// Structural checks on one allocation: known configuration, known slots, no
/// shared slot, and at most one slot per retraining task.
pub fn validate_allocation(catalog: &Catalog, alloc: &Allocation) -> Vec<AllocationViolation> {
    let mut out = Vec::new();
    let Some(config) = catalog.get(&alloc.configuration) else {
        out.push(AllocationViolation {
            kind: AllocationViolationKind::UnknownConfiguration,
            task: None,
            detail: format!("configuration `{}` is not in the catalog", alloc.configuration),
        });
        return out;
    };
    let valid = config.all_slots().0;
    let mut seen = 0u8;
    for (&task, mask) in &alloc.assignments {
        let unknown = mask.0 & !valid;
        if unknown != 0 {
            out.push(AllocationViolation {
                kind: AllocationViolationKind::UnknownSlot,
                task: Some(task),
                detail: format!("slots {:?} not in `{}`", SlotMask(unknown).ids().collect::<Vec<_>>(), config.id),
            });
        }
        let shared = seen & mask.0;
        if shared != 0 {
            out.push(AllocationViolation {
                kind: AllocationViolationKind::InstanceShared,
                task: Some(task),
                detail: format!("slots {:?} already assigned", SlotMask(shared).ids().collect::<Vec<_>>()),
            });
        }
        seen |= mask.0;
        if task.kind == TaskKind::Retraining && mask.len() > 1 {
            out.push(AllocationViolation {
                kind: AllocationViolationKind::RetrainingMultiInstance,
                task: Some(task),
                detail: format!("holds {} instances", mask.len()),
            });
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub flags: BTreeMap<TaskId, bool>,
    pub created: Vec<InstanceSlot>,
    pub destroyed: Vec<InstanceSlot>,
}

impl DiffReport {
    pub fn changed(&self, task: TaskId) -> bool {
        self.flags.get(&task).copied().unwrap_or(false)
    }
}

/// Compares two allocations by physical identity.
///
/// A task is flagged when its set of `(slice_start, size)` pairs differs.
/// `created` lists assigned instances of `next` whose placement is not assigned
/// in `prev`; `destroyed` is the converse. Both are reported with the slot ids
/// of the allocation they appear in.
pub fn reconfiguration_diff(catalog: &Catalog, prev: &Allocation, next: &Allocation) -> DiffReport {
    let mut flags = BTreeMap::new();
    for &task in prev.assignments.keys().chain(next.assignments.keys()) {
        let changed = prev.footprint(catalog, task) != next.footprint(catalog, task);
        flags.insert(task, changed);
    }
    let assigned = |a: &Allocation| -> Vec<InstanceSlot> {
        match catalog.get(&a.configuration) {
            Some(c) => c.slots.iter().filter(|s| a.occupied().contains(s.id)).copied().collect(),
            None => Vec::new(),
        }
    };
    let before = assigned(prev);
    let after = assigned(next);
    let created = after.iter().filter(|s| !before.iter().any(|b| b.placement() == s.placement())).copied().collect();
    let destroyed = before.iter().filter(|s| !after.iter().any(|a| a.placement() == s.placement())).copied().collect();
    DiffReport { flags, created, destroyed }
}

/// The weaker instance-count / GPC-count test: a task is flagged only when the
/// number of instances or GPCs it holds changes.
pub fn count_change_flags(catalog: &Catalog, prev: &Allocation, next: &Allocation) -> BTreeMap<TaskId, bool> {
    let mut flags = BTreeMap::new();
    for &task in prev.assignments.keys().chain(next.assignments.keys()) {
        let a = prev.footprint(catalog, task);
        let b = next.footprint(catalog, task);
        flags.insert(task, a.instance_count() != b.instance_count() || a.gpc_count() != b.gpc_count());
    }
    flags
}
