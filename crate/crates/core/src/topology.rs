//! GPON access tree plus the metro/core chain towards the cloud.
//!
//! The graph is a tree: AP -> ONT -> OLT -> metro/core hops -> cloud switch,
//! with the cloud storage hanging off the last hop and the content server off
//! a configurable hop. Every adjacent pair is joined by two directed links.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{class, DeviceCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layer {
    AccessPoint,
    Ont,
    Olt,
    Metro,
    Core,
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub device_class: String,
    pub layer: Layer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub id: LinkId,
    pub from: NodeId,
    pub to: NodeId,
    /// bits per second
    pub capacity: f64,
    pub hc_capacity_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GponParams {
    pub n_aps: usize,
    pub n_patients: u32,
    /// Shared GPON trunk, split evenly across the ONT links in each direction.
    pub gpon_trunk_capacity: f64,
    /// Device classes from the OLT towards the cloud, in order.
    pub metro_core_hops: Vec<String>,
    /// Index into `metro_core_hops` of the hop hosting the content server.
    pub content_server_hop: usize,
    /// Healthcare capacity of each OLT -> ONT link.
    pub downstream_hc_override: Option<f64>,
    /// Healthcare capacity of each ONT -> OLT link.
    pub upstream_hc_override: Option<f64>,
}

impl Default for GponParams {
    fn default() -> Self {
        GponParams {
            n_aps: 32,
            n_patients: 200,
            gpon_trunk_capacity: 2.5e9,
            metro_core_hops: vec![
                class::AGGREGATION_SWITCH.to_string(),
                class::AGGREGATION_ROUTER.to_string(),
                class::CORE_ROUTER.to_string(),
                class::AGGREGATION_ROUTER.to_string(),
                class::CLOUD_SWITCH.to_string(),
            ],
            content_server_hop: 2,
            downstream_hc_override: Some(468_750.0),
            upstream_hc_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("invalid topology parameters: {0}")]
    InvalidParams(String),
    #[error("device class `{0}` is not in the catalog")]
    UnknownClass(String),
    #[error("device class `{0}` has no throughput capacity")]
    MissingCapacity(String),
    #[error("no node named `{0}`")]
    UnknownNode(String),
    #[error("no path between {0:?} and {1:?}")]
    Disconnected(NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn reversed(&self, topology: &Topology) -> Path {
        let nodes: Vec<NodeId> = self.nodes.iter().rev().copied().collect();
        let links = nodes
            .windows(2)
            .map(|w| topology.link_between(w[0], w[1]).expect("adjacent nodes"))
            .collect();
        Path { nodes, links }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub aps: Vec<NodeId>,
    pub onts: Vec<NodeId>,
    pub olt: NodeId,
    pub chain: Vec<NodeId>,
    pub content_server: NodeId,
    pub storage: NodeId,
    /// Patients behind each AP, aligned with `aps`.
    pub patients_per_ap: Vec<u32>,
    parent: Vec<Option<NodeId>>,
    up_link: Vec<Option<LinkId>>,
    down_link: Vec<Option<LinkId>>,
    by_name: HashMap<String, NodeId>,
}

impl Topology {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn node_by_name(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id.0]
    }

    pub fn n_patients(&self) -> u32 {
        self.patients_per_ap.iter().sum()
    }

    /// Ids of the cloud-layer hops plus the content server and storage.
    pub fn cloud_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.layer == Layer::Cloud)
            .map(|n| n.id)
            .collect()
    }

    pub fn link_between(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        if self.parent[from.0] == Some(to) {
            self.up_link[from.0]
        } else if self.parent[to.0] == Some(from) {
            self.down_link[to.0]
        } else {
            None
        }
    }

    fn depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[id.0] {
            id = p;
            d += 1;
        }
        d
    }
}

struct Builder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    parent: Vec<Option<NodeId>>,
    up_link: Vec<Option<LinkId>>,
    down_link: Vec<Option<LinkId>>,
}

impl Builder {
    fn node(&mut self, name: String, device_class: &str, layer: Layer) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            id,
            name,
            device_class: device_class.to_string(),
            layer,
        });
        self.parent.push(None);
        self.up_link.push(None);
        self.down_link.push(None);
        id
    }

    fn attach(
        &mut self,
        child: NodeId,
        parent: NodeId,
        capacity: f64,
        up_override: Option<f64>,
        down_override: Option<f64>,
    ) {
        self.parent[child.0] = Some(parent);
        let up = LinkId(self.links.len());
        self.links.push(Link {
            id: up,
            from: child,
            to: parent,
            capacity,
            hc_capacity_override: up_override,
        });
        let down = LinkId(self.links.len());
        self.links.push(Link {
            id: down,
            from: parent,
            to: child,
            capacity,
            hc_capacity_override: down_override,
        });
        self.up_link[child.0] = Some(up);
        self.down_link[child.0] = Some(down);
    }
}

fn rate_capacity(catalog: &DeviceCatalog, device_class: &str) -> Result<Option<f64>, TopologyError> {
    let spec = catalog
        .get(device_class)
        .ok_or_else(|| TopologyError::UnknownClass(device_class.to_string()))?;
    Ok(spec.capacity.and_then(|c| c.rate()))
}

fn required_rate(catalog: &DeviceCatalog, device_class: &str) -> Result<f64, TopologyError> {
    rate_capacity(catalog, device_class)?
        .ok_or_else(|| TopologyError::MissingCapacity(device_class.to_string()))
}

fn short_code(device_class: &str, layer: Layer) -> String {
    match device_class {
        class::AGGREGATION_SWITCH => "AGGSW".into(),
        class::AGGREGATION_ROUTER if layer == Layer::Cloud => "CLOUDR".into(),
        class::AGGREGATION_ROUTER => "AGGR".into(),
        class::CORE_ROUTER => "CORE".into(),
        class::CLOUD_SWITCH => "CLOUDSW".into(),
        other => other
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_uppercase())
            .collect(),
    }
}

/// Patients spread as evenly as integers allow; the first APs take the remainder.
pub fn distribute_patients(n_patients: u32, n_aps: usize) -> Vec<u32> {
    if n_aps == 0 {
        return Vec::new();
    }
    let base = n_patients / n_aps as u32;
    let extra = (n_patients % n_aps as u32) as usize;
    (0..n_aps).map(|i| base + u32::from(i < extra)).collect()
}

pub fn build_gpon(params: &GponParams, catalog: &DeviceCatalog) -> Result<Topology, TopologyError> {
    let invalid = |msg: String| Err(TopologyError::InvalidParams(msg));
    if params.n_aps == 0 {
        return invalid("n_aps must be positive".into());
    }
    if params.metro_core_hops.is_empty() {
        return invalid("metro_core_hops must not be empty".into());
    }
    if params.content_server_hop >= params.metro_core_hops.len() {
        return invalid(format!(
            "content_server_hop {} is beyond the {}-hop chain",
            params.content_server_hop,
            params.metro_core_hops.len()
        ));
    }
    if !(params.gpon_trunk_capacity > 0.0) {
        return invalid("gpon_trunk_capacity must be positive".into());
    }

    let ap_cap = required_rate(catalog, class::ACCESS_POINT)?;
    let ont_cap = required_rate(catalog, class::ONT)?;
    let olt_cap = required_rate(catalog, class::OLT)?;
    let trunk_share = params.gpon_trunk_capacity / params.n_aps as f64;
    for (what, value) in [
        ("downstream_hc_override", params.downstream_hc_override),
        ("upstream_hc_override", params.upstream_hc_override),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v <= trunk_share) {
                return invalid(format!("{what} = {v} must be in (0, {trunk_share}]"));
            }
        }
    }

    let mut b = Builder {
        nodes: Vec::new(),
        links: Vec::new(),
        parent: Vec::new(),
        up_link: Vec::new(),
        down_link: Vec::new(),
    };

    let mut aps = Vec::with_capacity(params.n_aps);
    let mut onts = Vec::with_capacity(params.n_aps);
    for i in 1..=params.n_aps {
        aps.push(b.node(format!("AP_{i}"), class::ACCESS_POINT, Layer::AccessPoint));
        onts.push(b.node(format!("ONT_{i}"), class::ONT, Layer::Ont));
    }
    let olt = b.node("OLT".into(), class::OLT, Layer::Olt);

    let first_core = params.metro_core_hops.iter().position(|c| c == class::CORE_ROUTER);
    let last_core = params.metro_core_hops.iter().rposition(|c| c == class::CORE_ROUTER);
    let mut counters: HashMap<String, usize> = HashMap::new();
    let mut chain = Vec::with_capacity(params.metro_core_hops.len());
    for (i, device_class) in params.metro_core_hops.iter().enumerate() {
        let layer = match (first_core, last_core) {
            _ if device_class == class::CORE_ROUTER => Layer::Core,
            (Some(f), _) if i < f => Layer::Metro,
            (_, Some(l)) if i > l => Layer::Cloud,
            (None, None) if device_class == class::CLOUD_SWITCH => Layer::Cloud,
            _ => Layer::Metro,
        };
        let code = short_code(device_class, layer);
        let n = counters.entry(code.clone()).or_insert(0);
        *n += 1;
        let id = b.node(format!("{code}_{n}"), device_class, layer);
        chain.push(id);
    }
    let content_server = b.node("CONTENT".into(), class::CONTENT_SERVER, Layer::Cloud);
    let storage = b.node("STORAGE".into(), class::CLOUD_STORAGE, Layer::Cloud);

    for (&ap, &ont) in aps.iter().zip(&onts) {
        b.attach(ap, ont, ap_cap.min(ont_cap), None, None);
        b.attach(
            ont,
            olt,
            trunk_share,
            params.upstream_hc_override,
            params.downstream_hc_override,
        );
    }

    let mut prev = (olt, olt_cap);
    for &hop in &chain {
        let cap = required_rate(catalog, &b.nodes[hop.0].device_class.clone())?;
        b.attach(hop, prev.0, cap.min(prev.1), None, None);
        prev = (hop, cap);
    }
    let host = chain[params.content_server_hop];
    let host_cap = required_rate(catalog, &b.nodes[host.0].device_class.clone())?;
    let content_cap = required_rate(catalog, class::CONTENT_SERVER)?;
    b.attach(content_server, host, content_cap.min(host_cap), None, None);
    // storage capacity is a volume; the link takes the switch's rate
    let storage_link = rate_capacity(catalog, class::CLOUD_STORAGE)?.map_or(prev.1, |c| c.min(prev.1));
    b.attach(storage, prev.0, storage_link, None, None);

    let by_name = b.nodes.iter().map(|n| (n.name.clone(), n.id)).collect();
    Ok(Topology {
        nodes: b.nodes,
        links: b.links,
        aps,
        onts,
        olt,
        chain,
        content_server,
        storage,
        patients_per_ap: distribute_patients(params.n_patients, params.n_aps),
        parent: b.parent,
        up_link: b.up_link,
        down_link: b.down_link,
        by_name,
    })
}

/// The unique simple path between two nodes.
pub fn route(topology: &Topology, src: NodeId, dst: NodeId) -> Result<Path, TopologyError> {
    let n = topology.nodes.len();
    if src.0 >= n {
        return Err(TopologyError::UnknownNode(format!("{src:?}")));
    }
    if dst.0 >= n {
        return Err(TopologyError::UnknownNode(format!("{dst:?}")));
    }

    let (mut a, mut b) = (src, dst);
    let (mut da, mut db) = (topology.depth(a), topology.depth(b));
    let mut up = vec![a];
    let mut down = vec![b];
    while da > db {
        a = topology.parent(a).ok_or(TopologyError::Disconnected(src, dst))?;
        up.push(a);
        da -= 1;
    }
    while db > da {
        b = topology.parent(b).ok_or(TopologyError::Disconnected(src, dst))?;
        down.push(b);
        db -= 1;
    }
    while a != b {
        a = topology.parent(a).ok_or(TopologyError::Disconnected(src, dst))?;
        b = topology.parent(b).ok_or(TopologyError::Disconnected(src, dst))?;
        up.push(a);
        down.push(b);
    }
    down.pop();
    up.extend(down.into_iter().rev());

    let links = up
        .windows(2)
        .map(|w| {
            topology
                .link_between(w[0], w[1])
                .ok_or(TopologyError::Disconnected(w[0], w[1]))
        })
        .collect::<Result<_, _>>()?;
    Ok(Path { nodes: up, links })
}

/// Capacity of the link reserved for the healthcare application.
pub fn link_hc_capacity(link: &Link, catalog: &DeviceCatalog) -> f64 {
    link.hc_capacity_override
        .unwrap_or(catalog.hc_share * link.capacity)
}

/// All ONTs in id order, then the OLT.
pub fn candidate_sites(topology: &Topology) -> Vec<NodeId> {
    let mut sites = topology.onts.clone();
    sites.push(topology.olt);
    sites
}

/// Narrowest healthcare capacity between any candidate site and the storage.
///
/// Analysed data from every site shares this bottleneck, so the per-patient
/// cloud rate is this value divided by the per-server patient cap.
pub fn analysed_uplink_share(topology: &Topology, catalog: &DeviceCatalog) -> f64 {
    candidate_sites(topology)
        .into_iter()
        .map(|site| bottleneck_hc_capacity(topology, catalog, site, topology.storage))
        .fold(f64::INFINITY, f64::min)
}

pub fn bottleneck_hc_capacity(
    topology: &Topology,
    catalog: &DeviceCatalog,
    src: NodeId,
    dst: NodeId,
) -> f64 {
    route(topology, src, dst)
        .map(|p| {
            p.links
                .iter()
                .map(|&l| link_hc_capacity(topology.link(l), catalog))
                .fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(0.0)
}
