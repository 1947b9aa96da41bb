//! Decentralized cache placement and the induced subfile partition.
//!
//! Every user independently stores `round(MF/N)` packets of each file,
//! drawn uniformly without replacement. Packet `f` of file `i` then belongs
//! to exactly one subfile `W_{i|S}`, where `S` is the set of users holding it.

use std::collections::BTreeMap;
use std::io;

use rand::Rng;

use crate::gf::Payload;
use crate::params::SystemParams;
use crate::userset::UserSet;

/// The file library: `N` files of `F` payloads each.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    payload_len: usize,
    files: Vec<Vec<Payload>>,
}

impl Library {
    pub fn from_files(payload_len: usize, files: Vec<Vec<Payload>>) -> Self {
        debug_assert!(files.iter().flatten().all(|p| p.len() == payload_len));
        Library { payload_len, files }
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    pub fn file_packets(&self) -> usize {
        self.files.first().map_or(0, Vec::len)
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn file(&self, file: usize) -> &[Payload] {
        &self.files[file]
    }

    pub fn packet(&self, file: usize, index: usize) -> &Payload {
        &self.files[file][index]
    }
}

pub fn generate_library<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Library {
    let files = (0..params.files)
        .map(|_| {
            (0..params.file_packets)
                .map(|_| Payload::random(params.payload_len, rng))
                .collect()
        })
        .collect();
    Library::from_files(params.payload_len, files)
}

/// Which packet indices each user stores, per file.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheTable {
    users: usize,
    file_packets: usize,
    /// `cached[user][file]`, sorted ascending.
    cached: Vec<Vec<Vec<u32>>>,
    /// `holders[file][index]`: users storing that packet.
    holders: Vec<Vec<UserSet>>,
}

impl CacheTable {
    /// Builds a table from explicit per-(user, file) index sets.
    pub fn from_sets(
        users: usize,
        files: usize,
        file_packets: usize,
        mut cached: Vec<Vec<Vec<u32>>>,
    ) -> Self {
        assert_eq!(cached.len(), users);
        let mut holders = vec![vec![UserSet::EMPTY; file_packets]; files];
        for (user, per_file) in cached.iter_mut().enumerate() {
            assert_eq!(per_file.len(), files);
            for (file, indices) in per_file.iter_mut().enumerate() {
                indices.sort_unstable();
                indices.dedup();
                for &f in indices.iter() {
                    holders[file][f as usize] = holders[file][f as usize].with(user);
                }
            }
        }
        CacheTable {
            users,
            file_packets,
            cached,
            holders,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn num_files(&self) -> usize {
        self.holders.len()
    }

    pub fn file_packets(&self) -> usize {
        self.file_packets
    }

    pub fn cached(&self, user: usize, file: usize) -> &[u32] {
        &self.cached[user][file]
    }

    pub fn holders(&self, file: usize, index: usize) -> UserSet {
        self.holders[file][index]
    }

    pub fn contains(&self, user: usize, file: usize, index: usize) -> bool {
        self.holders[file][index].contains(user)
    }

    /// Total packets stored by `user` across all files.
    pub fn stored_packets(&self, user: usize) -> usize {
        self.cached[user].iter().map(Vec::len).sum()
    }

    /// The cached copy of a packet, if `user` stores it.
    pub fn payload<'a>(
        &self,
        library: &'a Library,
        user: usize,
        file: usize,
        index: usize,
    ) -> Option<&'a Payload> {
        self.contains(user, file, index)
            .then(|| library.packet(file, index))
    }
}

pub fn place_decentralized<R: Rng + ?Sized>(
    library: &Library,
    params: &SystemParams,
    rng: &mut R,
) -> CacheTable {
    let quota = params.quota();
    let file_packets = library.file_packets();
    let cached = (0..params.users)
        .map(|_| {
            (0..library.num_files())
                .map(|_| {
                    rand::seq::index::sample(rng, file_packets, quota.min(file_packets))
                        .into_iter()
                        .map(|f| f as u32)
                        .collect()
                })
                .collect()
        })
        .collect();
    CacheTable::from_sets(params.users, library.num_files(), file_packets, cached)
}

/// For each file, the packet indices held by exactly each user subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubfileMap {
    users: usize,
    file_packets: usize,
    files: Vec<BTreeMap<UserSet, Vec<u32>>>,
}

impl SubfileMap {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn file_packets(&self) -> usize {
        self.file_packets
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    /// Packets of `file` stored by exactly the users in `set`.
    pub fn entry(&self, file: usize, set: UserSet) -> &[u32] {
        self.files[file].get(&set).map_or(&[], Vec::as_slice)
    }

    /// Nonempty subfiles of `file`, ascending by subset bitmask.
    pub fn entries(&self, file: usize) -> impl Iterator<Item = (UserSet, &[u32])> {
        self.files[file].iter().map(|(s, v)| (*s, v.as_slice()))
    }

    /// Writes `file_id,subset_bitmask,count` rows for every nonempty subfile.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["file_id", "subset_bitmask", "count"])?;
        for (file, map) in self.files.iter().enumerate() {
            for (set, indices) in map {
                w.write_record([
                    file.to_string(),
                    set.bits().to_string(),
                    indices.len().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn subfile_partition(cache: &CacheTable, params: &SystemParams) -> SubfileMap {
    debug_assert_eq!(cache.users(), params.users);
    let files = (0..cache.num_files())
        .map(|file| {
            let mut map: BTreeMap<UserSet, Vec<u32>> = BTreeMap::new();
            for f in 0..cache.file_packets() {
                map.entry(cache.holders(file, f))
                    .or_default()
                    .push(f as u32);
            }
            map
        })
        .collect();
    SubfileMap {
        users: cache.users(),
        file_packets: cache.file_packets(),
        files,
    }
}

/// Fraction of `file` held by none of the users in `set`: the packet-count
/// analogue of `H(W_i | Z_set) / H(W_i)`.
pub fn uncached_fraction(map: &SubfileMap, file: usize, set: UserSet) -> f64 {
    let missing: usize = map
        .entries(file)
        .filter(|(holders, _)| holders.intersection(set).is_empty())
        .map(|(_, v)| v.len())
        .sum();
    missing as f64 / map.file_packets() as f64
}
