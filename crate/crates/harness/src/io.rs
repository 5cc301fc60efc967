//! File formats: topology and demand CSVs, path and snapshot JSON, and the
//! allocation CSV written by `te solve`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use te_core::model::{Commodity, CommodityKey, Edge, Instance, PathSet, Topology};
use te_core::TeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot access {}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Malformed { file: String, line: u64, reason: String },
    #[error("{file}: {reason}")]
    Invalid { file: String, reason: String },
    #[error(transparent)]
    Model(#[from] TeError),
}

pub type Result<T> = std::result::Result<T, InputError>;

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        file: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| InputError::Io {
        file: path.to_path_buf(),
        source,
    })
}

/// `A→B` key used by the JSON formats and the allocation CSV.
pub fn pair_name(topology: &Topology, src: usize, dst: usize) -> String {
    format!("{}→{}", topology.node_name(src), topology.node_name(dst))
}

/// Splits `A→B` (or `A->B`) into its endpoints.
pub fn split_pair(key: &str) -> Option<(&str, &str)> {
    let (a, b) = key.split_once('→').or_else(|| key.split_once("->"))?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() {
        None
    } else {
        Some((a, b))
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error(file: &str, e: csv::Error) -> InputError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    InputError::Malformed {
        file: file.to_string(),
        line,
        reason: e.to_string(),
    }
}

fn header_index(file: &str, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| InputError::Malformed {
        file: file.to_string(),
        line: 1,
        reason: format!("missing column {name}"),
    })
}

fn number(file: &str, record: &csv::StringRecord, index: usize, what: &str) -> Result<f64> {
    let raw = record.get(index).unwrap_or("");
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| InputError::Malformed {
            file: file.to_string(),
            line: line_of(record),
            reason: format!("{what} {raw:?} is not a finite number"),
        })
}

fn flag(file: &str, record: &csv::StringRecord, index: Option<usize>) -> Result<bool> {
    let raw = match index.and_then(|i| record.get(i)) {
        None | Some("") => return Ok(false),
        Some(v) => v.to_ascii_lowercase(),
    };
    match raw.as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(InputError::Malformed {
            file: file.to_string(),
            line: line_of(record),
            reason: format!("undirected flag {raw:?}"),
        }),
    }
}

/// Header `src,dst,capacity_mbps,weight[,undirected]`. An undirected row
/// becomes two directed edges, forward first.
pub fn parse_topology(file: &str, text: &str) -> Result<Topology> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let (is, id, ic, iw) = (
        header_index(file, &headers, "src")?,
        header_index(file, &headers, "dst")?,
        header_index(file, &headers, "capacity_mbps")?,
        header_index(file, &headers, "weight")?,
    );
    let iu = headers.iter().position(|h| h == "undirected");
    let mut nodes: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = line_of(&record);
        let bad = |reason: String| InputError::Malformed {
            file: file.to_string(),
            line,
            reason,
        };
        let mut node = |name: &str| -> Result<usize> {
            if name.is_empty() {
                return Err(bad("empty node name".into()));
            }
            if let Some(&i) = index.get(name) {
                return Ok(i);
            }
            nodes.push(name.to_string());
            index.insert(name.to_string(), nodes.len() - 1);
            Ok(nodes.len() - 1)
        };
        let src = node(record.get(is).unwrap_or(""))?;
        let dst = node(record.get(id).unwrap_or(""))?;
        let capacity = number(file, &record, ic, "capacity")?;
        let weight = number(file, &record, iw, "weight")?;
        if capacity < 0.0 {
            return Err(bad(format!("negative capacity {capacity}")));
        }
        if weight <= 0.0 {
            return Err(bad(format!("non-positive weight {weight}")));
        }
        if src == dst {
            return Err(bad("self loop".into()));
        }
        edges.push(Edge { src, dst, capacity, weight });
        if flag(file, &record, iu)? {
            edges.push(Edge { src: dst, dst: src, capacity, weight });
        }
    }
    Ok(Topology::new(nodes, edges)?)
}

/// Header `src,dst,demand_mbps`; node names must exist in `topology`.
pub fn parse_demands(file: &str, text: &str, topology: &Topology) -> Result<Vec<Commodity>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let (is, id, idem) = (
        header_index(file, &headers, "src")?,
        header_index(file, &headers, "dst")?,
        header_index(file, &headers, "demand_mbps")?,
    );
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let line = line_of(&record);
        let bad = |reason: String| InputError::Malformed {
            file: file.to_string(),
            line,
            reason,
        };
        let lookup = |name: &str| topology.node_id(name).ok_or_else(|| bad(format!("unknown node {name:?}")));
        let src = lookup(record.get(is).unwrap_or(""))?;
        let dst = lookup(record.get(id).unwrap_or(""))?;
        if src == dst {
            return Err(bad("source equals destination".into()));
        }
        let demand = number(file, &record, idem, "demand")?;
        if demand < 0.0 {
            return Err(bad(format!("negative demand {demand}")));
        }
        if seen.insert((src, dst), line).is_some() {
            return Err(bad("duplicate commodity".into()));
        }
        out.push(Commodity::new(src, dst, demand));
    }
    Ok(out)
}

/// JSON map from `src→dst` to lists of edge-index paths. Commodities absent
/// from the map get no paths.
pub fn parse_paths(file: &str, text: &str, topology: &Topology, commodities: &[Commodity]) -> Result<PathSet> {
    let raw: BTreeMap<String, Vec<Vec<usize>>> = serde_json::from_str(text).map_err(|e| InputError::Malformed {
        file: file.to_string(),
        line: e.line() as u64,
        reason: e.to_string(),
    })?;
    let mut by_key: BTreeMap<CommodityKey, Vec<Vec<usize>>> = BTreeMap::new();
    for (key, paths) in raw {
        let key = resolve_pair(file, topology, &key)?;
        by_key.insert(key, paths);
    }
    let positions: BTreeMap<CommodityKey, usize> = commodities.iter().enumerate().map(|(i, c)| (c.key(), i)).collect();
    if let Some(k) = by_key.keys().find(|k| !positions.contains_key(k)) {
        return Err(InputError::Invalid {
            file: file.to_string(),
            reason: format!("paths given for {} which has no demand row", pair_name(topology, k.src, k.dst)),
        });
    }
    Ok(PathSet::new(
        commodities.iter().map(|c| by_key.remove(&c.key()).unwrap_or_default()).collect(),
    ))
}

fn resolve_pair(file: &str, topology: &Topology, key: &str) -> Result<CommodityKey> {
    let invalid = |reason: String| InputError::Invalid {
        file: file.to_string(),
        reason,
    };
    let (a, b) = split_pair(key).ok_or_else(|| invalid(format!("key {key:?} is not of the form src→dst")))?;
    let src = topology.node_id(a).ok_or_else(|| invalid(format!("unknown node {a:?}")))?;
    let dst = topology.node_id(b).ok_or_else(|| invalid(format!("unknown node {b:?}")))?;
    Ok(CommodityKey { src, dst })
}

pub fn paths_json(topology: &Topology, commodities: &[Commodity], paths: &PathSet) -> String {
    let map: BTreeMap<String, &Vec<Vec<usize>>> = commodities
        .iter()
        .zip(&paths.paths)
        .map(|(c, p)| (pair_name(topology, c.src, c.dst), p))
        .collect();
    serde_json::to_string_pretty(&map).expect("paths serialise")
}

pub fn demands_csv(topology: &Topology, commodities: &[Commodity]) -> String {
    let mut out = String::from("src,dst,demand_mbps\n");
    for c in commodities {
        out.push_str(&format!("{},{},{}\n", topology.node_name(c.src), topology.node_name(c.dst), c.demand));
    }
    out
}

pub fn topology_csv(topology: &Topology) -> String {
    let mut out = String::from("src,dst,capacity_mbps,weight\n");
    for e in topology.edges() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            topology.node_name(e.src),
            topology.node_name(e.dst),
            e.capacity,
            e.weight
        ));
    }
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSnapshot {
    t_seconds: f64,
    #[serde(default)]
    demands: BTreeMap<String, f64>,
    #[serde(default)]
    capacities: BTreeMap<String, f64>,
}

/// Overrides read from a snapshots file, keyed by instance index.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotOverrides {
    pub t_seconds: f64,
    /// Commodity index within the instance → demand.
    pub demands: BTreeMap<usize, f64>,
    /// Edge index → capacity.
    pub capacities: BTreeMap<usize, f64>,
}

/// JSON array of `{t_seconds, demands, capacities}`; demand keys name
/// commodities of `instance`, capacity keys name directed edges.
pub fn parse_snapshots(file: &str, text: &str, instance: &Instance) -> Result<Vec<SnapshotOverrides>> {
    let raw: Vec<RawSnapshot> = serde_json::from_str(text).map_err(|e| InputError::Malformed {
        file: file.to_string(),
        line: e.line() as u64,
        reason: e.to_string(),
    })?;
    let topology = instance.topology();
    let commodity_index: BTreeMap<CommodityKey, usize> =
        instance.commodity_keys().into_iter().enumerate().map(|(i, k)| (k, i)).collect();
    let invalid = |reason: String| InputError::Invalid {
        file: file.to_string(),
        reason,
    };
    let value = |key: &str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(invalid(format!("value {v} for {key} must be finite and non-negative")))
        }
    };
    let mut out = Vec::with_capacity(raw.len());
    for snap in raw {
        if !snap.t_seconds.is_finite() {
            return Err(invalid("non-finite t_seconds".into()));
        }
        let mut demands = BTreeMap::new();
        for (key, v) in &snap.demands {
            let k = resolve_pair(file, topology, key)?;
            let c = *commodity_index
                .get(&k)
                .ok_or_else(|| invalid(format!("{key} is not a commodity of the base instance")))?;
            demands.insert(c, value(key, *v)?);
        }
        let mut capacities = BTreeMap::new();
        for (key, v) in &snap.capacities {
            let k = resolve_pair(file, topology, key)?;
            let e = topology
                .edge_id(k.src, k.dst)
                .ok_or_else(|| invalid(format!("{key} is not an edge")))?;
            capacities.insert(e, value(key, *v)?);
        }
        out.push(SnapshotOverrides {
            t_seconds: snap.t_seconds,
            demands,
            capacities,
        });
    }
    Ok(out)
}

/// Footer values of an allocation file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationFooter {
    pub objective: f64,
    pub iterations: usize,
    pub runtime_s: f64,
}

/// `path_id,commodity,rate_mbps` rows, then one `# objective=…` footer.
pub fn allocation_csv(instance: &Instance, rates: &[f64], footer: &AllocationFooter) -> String {
    let topology = instance.topology();
    let mut out = String::from("path_id,commodity,rate_mbps\n");
    for (r, rate) in rates.iter().enumerate() {
        let c = &instance.commodities()[instance.path_commodity(r)];
        out.push_str(&format!("{r},{},{rate}\n", pair_name(topology, c.src, c.dst)));
    }
    out.push_str(&format!(
        "# objective={} iterations={} runtime_s={}\n",
        footer.objective, footer.iterations, footer.runtime_s
    ));
    out
}

/// Rows of an allocation file: `(path_id, commodity name, rate)`.
pub fn parse_allocation(file: &str, text: &str) -> Result<Vec<(usize, String, f64)>> {
    let mut rdr = reader(text);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let (ip, ic, ir) = (
        header_index(file, &headers, "path_id")?,
        header_index(file, &headers, "commodity")?,
        header_index(file, &headers, "rate_mbps")?,
    );
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(file, e))?;
        let path = record
            .get(ip)
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| InputError::Malformed {
                file: file.to_string(),
                line: line_of(&record),
                reason: "path_id is not an index".into(),
            })?;
        let rate = number(file, &record, ir, "rate")?;
        out.push((path, record.get(ic).unwrap_or("").to_string(), rate));
    }
    Ok(out)
}

/// Per-path rates for `instance` from allocation rows, checked against the
/// instance's path count and commodity names.
pub fn allocation_rates(file: &str, instance: &Instance, rows: &[(usize, String, f64)]) -> Result<Vec<f64>> {
    let invalid = |reason: String| InputError::Invalid {
        file: file.to_string(),
        reason,
    };
    let mut rates = vec![f64::NAN; instance.num_paths()];
    for (path, name, rate) in rows {
        if *path >= rates.len() {
            return Err(invalid(format!("path_id {path} out of range 0..{}", rates.len())));
        }
        let c = &instance.commodities()[instance.path_commodity(*path)];
        let expected = pair_name(instance.topology(), c.src, c.dst);
        if split_pair(name) != split_pair(&expected) {
            return Err(invalid(format!("path {path} belongs to {expected}, file says {name}")));
        }
        rates[*path] = *rate;
    }
    if let Some(r) = rates.iter().position(|v| v.is_nan()) {
        return Err(invalid(format!("no rate for path {r}")));
    }
    Ok(rates)
}

/// Commodity totals by name, in first-appearance order.
pub fn allocation_sums(rows: &[(usize, String, f64)]) -> Vec<(String, f64)> {
    let mut order: Vec<(String, f64)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (_, name, rate) in rows {
        let key = match split_pair(name) {
            Some((a, b)) => format!("{a}→{b}"),
            None => name.clone(),
        };
        match index.get(&key) {
            Some(&i) => order[i].1 += rate,
            None => {
                index.insert(key.clone(), order.len());
                order.push((key, *rate));
            }
        }
    }
    order
}
