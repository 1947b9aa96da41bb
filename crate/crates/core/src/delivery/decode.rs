//! Per-user decoding from the user's cache, its receptions and the state
//! sequence.
//!
//! Every slot payload is a linear function of library packets. From user
//! `k`'s point of view each packet is either known (cached, or part of a slot
//! `k` received) or one of `k`'s unknowns (an uncached packet of its own
//! file). A slot `k` received in a subphase it belongs to yields one equation
//! over those unknowns. The resulting sparse system is mostly triangular, so
//! it is solved by peeling degree-one equations and falling back to dense
//! elimination on whatever coupled blocks remain.

use thiserror::Error;

use super::{Content, Transcript};
use crate::gf::{solve_linear_system, FieldElem, GfError, Payload};
use crate::placement::{CacheTable, Library};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeFailure {
    #[error("user {user}: {rank} independent equations for {unknowns} unknown packets")]
    RankDeficient {
        user: usize,
        rank: usize,
        unknowns: usize,
    },
    #[error("user {user}: slot {slot} depends on a packet the user can neither cancel nor wants")]
    Interference { user: usize, slot: usize },
    #[error("user {user}: received payloads contradict each other (slot {slot})")]
    Inconsistent { user: usize, slot: usize },
}

/// `sum terms[v] * x_v + constant`, terms sorted by variable.
#[derive(Debug, Clone)]
struct Expr {
    terms: Vec<(u32, FieldElem)>,
    constant: Payload,
}

impl Expr {
    fn constant(payload: Payload) -> Self {
        Expr {
            terms: Vec::new(),
            constant: payload,
        }
    }

    fn var(var: u32, payload_len: usize) -> Self {
        Expr {
            terms: vec![(var, FieldElem::ONE)],
            constant: Payload::zeroed(payload_len),
        }
    }

    fn add_scaled(&mut self, coeff: FieldElem, other: &Expr) {
        self.constant.add_scaled(coeff, &other.constant);
        if other.terms.is_empty() {
            return;
        }
        let mut merged = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut a, mut b) = (self.terms.iter().peekable(), other.terms.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(va, ca)), Some(&&(vb, cb))) => {
                    if va < vb {
                        merged.push((va, ca));
                        a.next();
                    } else if vb < va {
                        merged.push((vb, coeff * cb));
                        b.next();
                    } else {
                        let c = ca + coeff * cb;
                        if !c.is_zero() {
                            merged.push((va, c));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some(&&t), None) => {
                    merged.push(t);
                    a.next();
                }
                (None, Some(&&(vb, cb))) => {
                    merged.push((vb, coeff * cb));
                    b.next();
                }
                (None, None) => break,
            }
        }
        self.terms = merged;
    }
}

type Memo = Vec<Option<Result<Expr, DecodeFailure>>>;

struct View<'a> {
    user: usize,
    demand: usize,
    transcript: &'a Transcript,
    library: &'a Library,
    cache: &'a CacheTable,
    /// Variable index of each packet of the demanded file, if uncached.
    var_of: Vec<Option<u32>>,
    memo: Memo,
}

impl View<'_> {
    fn payload_len(&self) -> usize {
        self.library.payload_len()
    }

    fn packet_expr(&self, file: usize, index: usize, slot: usize) -> Result<Expr, DecodeFailure> {
        if let Some(p) = self.cache.payload(self.library, self.user, file, index) {
            return Ok(Expr::constant(p.clone()));
        }
        if file == self.demand {
            if let Some(v) = self.var_of[index] {
                return Ok(Expr::var(v, self.payload_len()));
            }
        }
        Err(DecodeFailure::Interference {
            user: self.user,
            slot,
        })
    }

    /// Expression of the combination sent in `slot` (ignoring whether the
    /// user received it).
    fn combination(&mut self, slot: usize) -> Result<Expr, DecodeFailure> {
        let transcript = self.transcript;
        let record = &transcript.slots[slot];
        let mut expr = Expr::constant(Payload::zeroed(self.payload_len()));
        for head in &record.heads {
            if head.coeff.is_zero() {
                continue;
            }
            let part = match head.content {
                Content::Packet(p) => self.packet_expr(p.file as usize, p.index as usize, slot)?,
                Content::Slot(s) => self.slot_value(s as usize)?.clone(),
            };
            expr.add_scaled(head.coeff, &part);
        }
        Ok(expr)
    }

    /// What the user knows about the payload of `slot`: the payload itself if
    /// received, otherwise its combination. Evaluated without recursion.
    fn slot_value(&mut self, slot: usize) -> Result<&Expr, DecodeFailure> {
        let transcript = self.transcript;
        let mut stack = vec![slot];
        while let Some(&top) = stack.last() {
            if self.memo[top].is_some() {
                stack.pop();
                continue;
            }
            let record = &transcript.slots[top];
            if record.state.received_by(self.user) {
                self.memo[top] = Some(Ok(Expr::constant(record.payload.clone())));
                stack.pop();
                continue;
            }
            let before = stack.len();
            for head in &record.heads {
                if let Content::Slot(d) = head.content {
                    if !head.coeff.is_zero() && self.memo[d as usize].is_none() {
                        stack.push(d as usize);
                    }
                }
            }
            if stack.len() > before {
                continue;
            }
            let value = self.combination(top);
            self.memo[top] = Some(value);
            stack.pop();
        }
        self.memo[slot]
            .as_ref()
            .expect("evaluated above")
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Recovers the file requested by `user`, bit-exactly, or reports why not.
pub fn decode_user(
    user: usize,
    transcript: &Transcript,
    library: &Library,
    cache: &CacheTable,
    demands: &[usize],
) -> Result<Vec<Payload>, DecodeFailure> {
    let demand = demands[user];
    let file_packets = library.file_packets();
    let mut var_of = vec![None; file_packets];
    let mut unknowns = 0u32;
    for (index, slot) in var_of.iter_mut().enumerate() {
        if !cache.contains(user, demand, index) {
            *slot = Some(unknowns);
            unknowns += 1;
        }
    }
    let mut view = View {
        user,
        demand,
        transcript,
        library,
        cache,
        var_of,
        memo: vec![None; transcript.slots.len()],
    };

    let mut rows = Vec::new();
    for (s, record) in transcript.slots.iter().enumerate() {
        if !record.subphase.contains(user) || !record.state.received_by(user) {
            continue;
        }
        let expr = view.combination(s)?;
        let mut rhs = record.payload.clone();
        rhs.add_scaled(FieldElem::ONE, &expr.constant);
        rows.push(Row {
            slot: s,
            terms: expr.terms,
            rhs,
        });
    }

    let solved = solve_sparse(user, rows, unknowns as usize)?;
    Ok((0..file_packets)
        .map(|index| match view.var_of[index] {
            Some(v) => solved[v as usize].clone(),
            None => library.packet(demand, index).clone(),
        })
        .collect())
}

struct Row {
    slot: usize,
    terms: Vec<(u32, FieldElem)>,
    rhs: Payload,
}

fn solve_sparse(
    user: usize,
    mut rows: Vec<Row>,
    unknowns: usize,
) -> Result<Vec<Payload>, DecodeFailure> {
    let mut solved: Vec<Option<Payload>> = vec![None; unknowns];
    let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); unknowns];
    let mut ready = Vec::new();
    let mut used = vec![false; rows.len()];
    for (r, row) in rows.iter().enumerate() {
        match row.terms.len() {
            0 if !row.rhs.is_zero() => {
                return Err(DecodeFailure::Inconsistent {
                    user,
                    slot: row.slot,
                })
            }
            0 => used[r] = true,
            1 => ready.push(r),
            _ => {}
        }
        for &(v, _) in &row.terms {
            occurs[v as usize].push(r);
        }
    }

    // Peel: a row with one remaining unknown determines it.
    while let Some(r) = ready.pop() {
        if used[r] || rows[r].terms.len() != 1 {
            continue;
        }
        used[r] = true;
        let (v, c) = rows[r].terms[0];
        let inv = c.inv().expect("terms are nonzero");
        let mut value = rows[r].rhs.clone();
        value.scale(inv);
        for &o in &occurs[v as usize] {
            if o == r {
                continue;
            }
            let row = &mut rows[o];
            let Some(pos) = row.terms.iter().position(|&(w, _)| w == v) else {
                continue;
            };
            let (_, coeff) = row.terms.remove(pos);
            row.rhs.add_scaled(coeff, &value);
            match row.terms.len() {
                1 => ready.push(o),
                0 => {
                    used[o] = true;
                    if !row.rhs.is_zero() {
                        return Err(DecodeFailure::Inconsistent {
                            user,
                            slot: row.slot,
                        });
                    }
                }
                _ => {}
            }
        }
        solved[v as usize] = Some(value);
    }

    // Whatever is left is coupled: eliminate each connected block densely.
    let mut parent: Vec<usize> = (0..unknowns).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let leftover: Vec<usize> = (0..rows.len()).filter(|&r| !used[r]).collect();
    for &r in &leftover {
        let first = rows[r].terms[0].0 as usize;
        for &(v, _) in &rows[r].terms[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, v as usize));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for &r in &leftover {
        let root = find(&mut parent, rows[r].terms[0].0 as usize);
        blocks.entry(root).or_default().push(r);
    }
    for block in blocks.values() {
        let mut vars: Vec<u32> = block
            .iter()
            .flat_map(|&r| rows[r].terms.iter().map(|t| t.0))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        let local = |v: u32| vars.binary_search(&v).expect("variable of this block");
        let dense: Vec<(Vec<FieldElem>, Payload)> = block
            .iter()
            .map(|&r| {
                let mut coeffs = vec![FieldElem::ZERO; vars.len()];
                for &(v, c) in &rows[r].terms {
                    coeffs[local(v)] = c;
                }
                (coeffs, rows[r].rhs.clone())
            })
            .collect();
        let values = match solve_linear_system(dense, vars.len()) {
            Ok(values) => values,
            Err(GfError::Singular { rank, .. }) => {
                let solved_count = solved.iter().filter(|s| s.is_some()).count();
                return Err(DecodeFailure::RankDeficient {
                    user,
                    rank: solved_count + rank,
                    unknowns,
                });
            }
            Err(e) => unreachable!("well-formed block: {e}"),
        };
        // Redundant rows must agree with the solution.
        for &r in block {
            let mut check = rows[r].rhs.clone();
            for &(v, c) in &rows[r].terms {
                check.add_scaled(c, &values[local(v)]);
            }
            if !check.is_zero() {
                return Err(DecodeFailure::Inconsistent {
                    user,
                    slot: rows[r].slot,
                });
            }
        }
        for (v, value) in vars.iter().zip(values) {
            solved[*v as usize] = Some(value);
        }
    }

    let rank = solved.iter().filter(|s| s.is_some()).count();
    if rank < unknowns {
        return Err(DecodeFailure::RankDeficient {
            user,
            rank,
            unknowns,
        });
    }
    Ok(solved.into_iter().map(|s| s.expect("all solved")).collect())
}
