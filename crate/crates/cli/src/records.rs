//! Output records and their two renderings: line-delimited JSON documents
//! (the canonical machine interface, one self-describing record per line)
//! and CSV with a per-command header.

use serde::Serialize;

use aplab_core::construct::{ExhaustiveExpectation, MonteCarloReport};
use aplab_core::exact::{TableCheck, TableViolation, WindowStabilityRow};
use aplab_core::freiman::{IsoReport, PlunneckeReport};
use aplab_core::structure::BsgReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// One JSON document per line.
    Lines,
    /// Header row plus one comma-separated row per record.
    Csv,
}

/// A record that can render itself as a CSV row. JSON rendering comes from
/// Serialize; field order in both renderings follows struct declaration.
pub trait Record: Serialize {
    fn csv_header(&self) -> &'static str;
    fn csv_row(&self) -> String;
}

/// Space-joined integers: CSV-safe rendering for set-valued fields.
pub fn join(elems: &[i64]) -> String {
    elems
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_u64(elems: &[u64]) -> String {
    elems
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Quotes a free-text CSV field.
fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub struct Emitter {
    format: Format,
    buf: String,
    header_done: bool,
}

impl Emitter {
    pub fn new(format: Format) -> Self {
        Emitter {
            format,
            buf: String::new(),
            header_done: false,
        }
    }

    pub fn record<R: Record>(&mut self, r: &R) {
        match self.format {
            Format::Lines => {
                self.buf
                    .push_str(&serde_json::to_string(r).expect("record serializes"));
                self.buf.push('\n');
            }
            Format::Csv => {
                if !self.header_done {
                    self.buf.push_str(r.csv_header());
                    self.buf.push('\n');
                    self.header_done = true;
                }
                self.buf.push_str(&r.csv_row());
                self.buf.push('\n');
            }
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

#[derive(Serialize)]
pub struct RkRecord {
    pub kind: &'static str,
    pub k: u32,
    pub n: u32,
    pub value: u32,
    pub certified: bool,
    pub witness: Vec<i64>,
}

impl Record for RkRecord {
    fn csv_header(&self) -> &'static str {
        "kind,k,n,value,certified,witness"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.kind,
            self.k,
            self.n,
            self.value,
            self.certified,
            join(&self.witness)
        )
    }
}

#[derive(Serialize)]
pub struct FindNRecord {
    pub kind: &'static str,
    pub k: u32,
    pub value: u32,
    pub n: u32,
}

impl Record for FindNRecord {
    fn csv_header(&self) -> &'static str {
        "kind,k,value,n"
    }
    fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.kind, self.k, self.value, self.n)
    }
}

#[derive(Serialize)]
pub struct FskRecord {
    pub kind: &'static str,
    pub k: u32,
    pub s: u32,
    pub n: u32,
    pub window: u32,
    pub value: u64,
    pub certified: bool,
    pub witness: Vec<i64>,
}

impl Record for FskRecord {
    fn csv_header(&self) -> &'static str {
        "kind,k,s,n,window,value,certified,witness"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.k,
            self.s,
            self.n,
            self.window,
            self.value,
            self.certified,
            join(&self.witness)
        )
    }
}

#[derive(Serialize)]
pub struct StabilityRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub row: WindowStabilityRow,
}

impl Record for StabilityRecord {
    fn csv_header(&self) -> &'static str {
        "kind,n,window_small,value_small,window_large,value_large,certified,stable"
    }
    fn csv_row(&self) -> String {
        let r = &self.row;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            r.n,
            r.window_small,
            r.value_small,
            r.window_large,
            r.value_large,
            r.certified,
            r.stable
        )
    }
}

#[derive(Serialize)]
pub struct SeedRecord {
    pub kind: &'static str,
    pub bound: u64,
    pub size: usize,
    pub set: Vec<i64>,
}

impl Record for SeedRecord {
    fn csv_header(&self) -> &'static str {
        "kind,bound,size,set"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.kind,
            self.bound,
            self.size,
            join(&self.set)
        )
    }
}

#[derive(Serialize)]
pub struct ProductRecord {
    pub kind: &'static str,
    pub variant: String,
    pub m: u64,
    pub n: u64,
    pub u_size: usize,
    pub v_size: usize,
    pub size: usize,
    pub set: Vec<i64>,
}

impl Record for ProductRecord {
    fn csv_header(&self) -> &'static str {
        "kind,variant,m,n,u_size,v_size,size,set"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.variant,
            self.m,
            self.n,
            self.u_size,
            self.v_size,
            self.size,
            join(&self.set)
        )
    }
}

#[derive(Serialize)]
pub struct BlockRecord {
    pub kind: &'static str,
    pub window: u64,
    pub s: u32,
    pub k: u32,
    pub offsets: Vec<u64>,
    pub size: usize,
    pub sap_count: u64,
    pub set: Vec<i64>,
}

impl Record for BlockRecord {
    fn csv_header(&self) -> &'static str {
        "kind,window,s,k,offsets,size,sap_count,set"
    }
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.window,
            self.s,
            self.k,
            join_u64(&self.offsets),
            self.size,
            self.sap_count,
            join(&self.set)
        )
    }
}

#[derive(Serialize)]
pub struct CountRecord {
    pub kind: &'static str,
    pub s: usize,
    pub size: usize,
    pub value: u64,
}

impl Record for CountRecord {
    fn csv_header(&self) -> &'static str {
        "kind,s,size,value"
    }
    fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.kind, self.s, self.size, self.value)
    }
}

#[derive(Serialize)]
pub struct MonteCarloRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub report: MonteCarloReport,
}

impl Record for MonteCarloRecord {
    fn csv_header(&self) -> &'static str {
        "kind,window,s,k,seed_size,trials,seed,mean,variance,min,max,mean_exact,bound,bound_f64,mean_meets_bound"
    }
    fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            r.window,
            r.s,
            r.k,
            r.seed_size,
            r.trials,
            r.seed,
            r.mean,
            r.variance,
            r.min,
            r.max,
            r.mean_exact,
            r.bound,
            r.bound_f64,
            r.mean_meets_bound
        )
    }
}

#[derive(Serialize)]
pub struct ExpectationRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub report: ExhaustiveExpectation,
}

impl Record for ExpectationRecord {
    fn csv_header(&self) -> &'static str {
        "kind,window,s,k,seed_size,vectors,mean_exact,mean_f64,min,max,bound,bound_f64,meets_bound"
    }
    fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            r.window,
            r.s,
            r.k,
            r.seed_size,
            r.vectors,
            r.mean_exact,
            r.mean_f64,
            r.min,
            r.max,
            r.bound,
            r.bound_f64,
            r.meets_bound
        )
    }
}

#[derive(Serialize)]
pub struct BsgRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub report: BsgReport,
}

impl Record for BsgRecord {
    fn csv_header(&self) -> &'static str {
        "kind,n,edge_count,density,constant_c,trivial,aprime_len,diff_len,\
         clause_size,clause_diff,clause_repr,measured_ratio,repr_checked,holds,\
         attempts,anchor,u_len,min_pair_paths"
    }
    fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            r.n,
            r.edge_count,
            r.density,
            r.constant_c,
            r.trivial,
            r.aprime_len,
            r.diff_len,
            r.clause_size,
            r.clause_diff,
            r.clause_repr,
            r.measured_ratio,
            r.repr_checked,
            r.holds,
            r.rich.attempts,
            r.rich.anchor.map_or(String::new(), |a| a.to_string()),
            r.rich.u_len,
            r.rich.min_pair_paths
        )
    }
}

#[derive(Serialize)]
pub struct FreimanRecord {
    pub kind: &'static str,
    pub source_size: usize,
    #[serde(flatten)]
    pub report: IsoReport,
}

impl Record for FreimanRecord {
    fn csv_header(&self) -> &'static str {
        "kind,source_size,order,is_isomorphism,lhs,rhs"
    }
    fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{}",
            self.kind,
            self.source_size,
            r.order,
            r.is_isomorphism,
            join(&r.lhs),
            join(&r.rhs)
        )
    }
}

#[derive(Serialize)]
pub struct PlunneckeRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub report: PlunneckeReport,
}

impl Record for PlunneckeRecord {
    fn csv_header(&self) -> &'static str {
        "kind,r_plus,r_minus,s_len,t_len,sum_len,iterated_len,ratio,bound,bound_f64,holds"
    }
    fn csv_row(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            r.r_plus,
            r.r_minus,
            r.s_len,
            r.t_len,
            r.sum_len,
            r.iterated_len,
            r.ratio,
            r.bound,
            r.bound_f64,
            r.holds
        )
    }
}

#[derive(Serialize)]
pub struct TableCheckRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub check: TableCheck,
}

impl Record for TableCheckRecord {
    fn csv_header(&self) -> &'static str {
        "kind,rule,pairs_checked,violations"
    }
    fn csv_row(&self) -> String {
        let c = &self.check;
        format!(
            "{},{},{},{}",
            self.kind, c.rule, c.pairs_checked, c.violations
        )
    }
}

#[derive(Serialize)]
pub struct TableViolationRecord {
    pub kind: &'static str,
    #[serde(flatten)]
    pub violation: TableViolation,
}

impl Record for TableViolationRecord {
    fn csv_header(&self) -> &'static str {
        "kind,rule,k,detail"
    }
    fn csv_row(&self) -> String {
        let v = &self.violation;
        format!("{},{},{},{}", self.kind, v.rule, v.k, quote(&v.detail))
    }
}
