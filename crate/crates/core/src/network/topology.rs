use std::io::Read;

use serde::{Deserialize, Serialize};

use super::NetworkError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyEntry {
    pub server: String,
    pub client: String,
    pub distance_km: f64,
    pub hops: u32,
}

/// Server/client distance and hop table.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    entries: Vec<TopologyEntry>,
}

/// SURFnet distances from the Delft 1 server.
const SURFNET: &[(&str, f64, u32)] = &[
    ("Delft 1", 0.0, 0),
    ("Delft 2", 2.2, 0),
    ("Rotterdam 1", 16.8, 1),
    ("Den Haag 2", 19.8, 0),
    ("Den Haag 1", 26.3, 1),
    ("Leiden 1", 30.6, 0),
    ("Rotterdam 2", 33.1, 0),
    ("Rotterdam 3", 40.2, 1),
    ("Leiden 2", 47.9, 2),
    ("Leiden 3", 55.2, 3),
];

impl Topology {
    pub fn surfnet() -> Self {
        let entries = SURFNET
            .iter()
            .map(|&(c, d, h)| TopologyEntry { server: "Delft 1".into(), client: c.into(), distance_km: d, hops: h })
            .collect();
        Self { entries }
    }

    pub fn new(entries: Vec<TopologyEntry>) -> Result<Self, NetworkError> {
        for e in &entries {
            if !(e.distance_km >= 0.0) || (e.distance_km == 0.0 && e.hops != 0) {
                return Err(NetworkError::Parameter(format!("bad topology row {} - {}", e.server, e.client)));
            }
        }
        Ok(Self { entries })
    }

    /// Reads `server,client,distance_km,hops` rows with a header line.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, NetworkError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let entries = rdr
            .deserialize()
            .collect::<Result<Vec<TopologyEntry>, _>>()
            .map_err(|e| NetworkError::Parameter(format!("topology csv: {e}")))?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[TopologyEntry] {
        &self.entries
    }

    /// Looks up a pair in either orientation.
    pub fn lookup(&self, server: &str, client: &str) -> Result<&TopologyEntry, NetworkError> {
        self.entries
            .iter()
            .find(|e| (e.server == server && e.client == client) || (e.server == client && e.client == server))
            .ok_or_else(|| NetworkError::UnknownPair(server.to_string(), client.to_string()))
    }
}
