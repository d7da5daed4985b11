//! Annotation tables, the dense item × coder matrix, label sets and gold labels.
//!
//! Input is long-form CSV with the header `item_id,coder_id,label`. Items and
//! coders keep their first-appearance order and label codes follow the
//! position of the label in its [`LabelSet`].

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};

/// Integer code of a label, its position in the [`LabelSet`].
pub type LabelCode = usize;

/// Ordered set of category names. Codes `0..K` are assigned by position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidLabelSet(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::InvalidLabelSet("empty label name".into()));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidLabelSet(format!("label `{l}` repeated")));
            }
        }
        Ok(Self { labels })
    }

    /// Parses a comma-separated list such as `"Neutral,Positive,Negative"`.
    pub fn parse_list(list: &str) -> Result<Self> {
        Self::new(list.split(',').map(str::trim))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn code(&self, name: &str) -> Option<LabelCode> {
        self.labels.iter().position(|l| l == name)
    }

    pub fn name(&self, code: LabelCode) -> &str {
        &self.labels[code]
    }
}

/// One coding decision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Record {
    pub item_id: String,
    pub coder_id: String,
    pub label: LabelCode,
}

/// Long-form annotations: at most one record per (item, coder) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationTable {
    label_set: LabelSet,
    records: Vec<Record>,
}

impl AnnotationTable {
    pub fn new(label_set: LabelSet, records: Vec<Record>) -> Result<Self> {
        let k = label_set.len();
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if r.label >= k {
                return Err(Error::LabelOutOfRange { code: r.label, k });
            }
            if !seen.insert((r.item_id.as_str(), r.coder_id.as_str())) {
                return Err(Error::DuplicatePair {
                    item: r.item_id.clone(),
                    coder: r.coder_id.clone(),
                });
            }
        }
        Ok(Self { label_set, records })
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct coder ids in first-appearance order.
    pub fn coders(&self) -> Vec<&str> {
        first_appearance(self.records.iter().map(|r| r.coder_id.as_str()))
    }

    /// Distinct item ids in first-appearance order.
    pub fn items(&self) -> Vec<&str> {
        first_appearance(self.records.iter().map(|r| r.item_id.as_str()))
    }
}

fn first_appearance<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = std::collections::HashSet::new();
    ids.filter(|id| seen.insert(*id)).collect()
}

/// Dense item × coder view of an [`AnnotationTable`]; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationMatrix {
    items: Vec<String>,
    coders: Vec<String>,
    label_set: LabelSet,
    cells: Vec<Option<LabelCode>>,
}

impl AnnotationMatrix {
    /// Builds a matrix from one row of cells per item.
    pub fn from_rows(
        items: Vec<String>,
        coders: Vec<String>,
        label_set: LabelSet,
        rows: Vec<Vec<Option<LabelCode>>>,
    ) -> Result<Self> {
        if rows.len() != items.len() {
            return Err(Error::Mismatch(format!(
                "{} rows for {} items",
                rows.len(),
                items.len()
            )));
        }
        let k = label_set.len();
        let mut cells = Vec::with_capacity(items.len() * coders.len());
        for row in rows {
            if row.len() != coders.len() {
                return Err(Error::Mismatch(format!(
                    "row of length {} for {} coders",
                    row.len(),
                    coders.len()
                )));
            }
            for cell in row {
                if let Some(code) = cell {
                    if code >= k {
                        return Err(Error::LabelOutOfRange { code, k });
                    }
                }
                cells.push(cell);
            }
        }
        check_unique(&items, "item")?;
        check_unique(&coders, "coder")?;
        Ok(Self {
            items,
            coders,
            label_set,
            cells,
        })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn coders(&self) -> &[String] {
        &self.coders
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_coders(&self) -> usize {
        self.coders.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_set.len()
    }

    pub fn get(&self, item: usize, coder: usize) -> Option<LabelCode> {
        self.cells[item * self.coders.len() + coder]
    }

    pub fn row(&self, item: usize) -> &[Option<LabelCode>] {
        let m = self.coders.len();
        &self.cells[item * m..(item + 1) * m]
    }

    /// Observed (coder index, label) pairs of one item.
    pub fn annotations(&self, item: usize) -> impl Iterator<Item = (usize, LabelCode)> + '_ {
        self.row(item)
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|l| (j, l)))
    }

    /// Per-label vote counts for one item.
    pub fn vote_counts(&self, item: usize) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels()];
        for (_, l) in self.annotations(item) {
            counts[l] += 1;
        }
        counts
    }

    /// Number of annotations on one item.
    pub fn item_annotation_count(&self, item: usize) -> usize {
        self.row(item).iter().filter(|c| c.is_some()).count()
    }

    /// Number of non-missing cells, i.e. coding decisions.
    pub fn n_decisions(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn n_missing(&self) -> usize {
        self.cells.len() - self.n_decisions()
    }

    pub fn item_index(&self, item_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item_id)
    }

    /// Label counts over every annotation in the matrix.
    pub fn label_frequencies(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels()];
        for l in self.cells.iter().flatten() {
            counts[*l] += 1;
        }
        counts
    }

    /// Back to long form, item-major then coder order.
    pub fn flatten(&self) -> AnnotationTable {
        let mut records = Vec::with_capacity(self.n_decisions());
        for (i, item) in self.items.iter().enumerate() {
            for (j, l) in self.annotations(i) {
                records.push(Record {
                    item_id: item.clone(),
                    coder_id: self.coders[j].clone(),
                    label: l,
                });
            }
        }
        AnnotationTable {
            label_set: self.label_set.clone(),
            records,
        }
    }

    /// Same data with coder columns reordered: new column `c` is old column `order[c]`.
    pub fn permute_coders(&self, order: &[usize]) -> Self {
        let coders = order.iter().map(|&c| self.coders[c].clone()).collect();
        let mut cells = Vec::with_capacity(self.cells.len());
        for i in 0..self.n_items() {
            let row = self.row(i);
            cells.extend(order.iter().map(|&c| row[c]));
        }
        Self {
            items: self.items.clone(),
            coders,
            label_set: self.label_set.clone(),
            cells,
        }
    }

    /// Same data with every label code `l` replaced by `mapping[l]`.
    pub fn relabel(&self, mapping: &[LabelCode]) -> Self {
        let mut names = vec![String::new(); self.n_labels()];
        for (old, &new) in mapping.iter().enumerate() {
            names[new] = self.label_set.name(old).to_string();
        }
        Self {
            items: self.items.clone(),
            coders: self.coders.clone(),
            label_set: LabelSet { labels: names },
            cells: self.cells.iter().map(|c| c.map(|l| mapping[l])).collect(),
        }
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Mismatch(format!("{what} id `{id}` repeated")));
        }
    }
    Ok(())
}

/// Expert labels for a subset of items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldSet {
    entries: BTreeMap<String, LabelCode>,
}

impl GoldSet {
    pub fn new(entries: BTreeMap<String, LabelCode>) -> Self {
        Self { entries }
    }

    pub fn get(&self, item_id: &str) -> Option<LabelCode> {
        self.entries.get(item_id).copied()
    }

    pub fn entries(&self) -> &BTreeMap<String, LabelCode> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn csv_rows(csv_text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(csv_text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .clone();
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != header {
        return Err(Error::Malformed(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Malformed(e.to_string()))?;
        if rec.iter().any(str::is_empty) {
            return Err(Error::Malformed(format!("empty field in data row {}", line + 1)));
        }
        rows.push(rec);
    }
    Ok(rows)
}

/// Parses long-form annotations. Without a `label_set`, labels are inferred in
/// first-appearance order.
pub fn parse_annotations(csv_text: &str, label_set: Option<&LabelSet>) -> Result<AnnotationTable> {
    let rows = csv_rows(csv_text, &["item_id", "coder_id", "label"])?;
    let label_set = match label_set {
        Some(ls) => ls.clone(),
        None => {
            let names = first_appearance(rows.iter().map(|r| &r[2]));
            LabelSet::new(names.into_iter().map(str::to_string))?
        }
    };
    let records = rows
        .iter()
        .map(|r| {
            let label = label_set
                .code(&r[2])
                .ok_or_else(|| Error::UnknownLabel(r[2].to_string()))?;
            Ok(Record {
                item_id: r[0].to_string(),
                coder_id: r[1].to_string(),
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = AnnotationTable::new(label_set, records)?;
    let n_coders = table.coders().len();
    if n_coders < 2 {
        return Err(Error::TooFewCoders(n_coders));
    }
    Ok(table)
}

/// Parses `item_id,gold_label` rows.
pub fn parse_gold(csv_text: &str, label_set: &LabelSet) -> Result<GoldSet> {
    let rows = csv_rows(csv_text, &["item_id", "gold_label"])?;
    let mut entries = BTreeMap::new();
    for r in &rows {
        let code = label_set
            .code(&r[1])
            .ok_or_else(|| Error::UnknownLabel(r[1].to_string()))?;
        if entries.insert(r[0].to_string(), code).is_some() {
            return Err(Error::DuplicateGold(r[0].to_string()));
        }
    }
    Ok(GoldSet { entries })
}

/// Dense grid of a table, with items and coders in first-appearance order.
pub fn build_matrix(table: &AnnotationTable) -> Result<AnnotationMatrix> {
    if table.is_empty() {
        return Err(Error::Empty);
    }
    let items: Vec<String> = table.items().into_iter().map(str::to_string).collect();
    let coders: Vec<String> = table.coders().into_iter().map(str::to_string).collect();
    let item_pos: HashMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let coder_pos: HashMap<&str, usize> = coders.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
    let m = coders.len();
    let mut cells = vec![None; items.len() * m];
    for r in table.records() {
        cells[item_pos[r.item_id.as_str()] * m + coder_pos[r.coder_id.as_str()]] = Some(r.label);
    }
    Ok(AnnotationMatrix {
        items,
        coders,
        label_set: table.label_set().clone(),
        cells,
    })
}

/// Writes long-form annotation CSV.
pub fn write_annotations_csv(matrix: &AnnotationMatrix) -> String {
    let mut out = String::from("item_id,coder_id,label\n");
    for r in matrix.flatten().records() {
        push_csv_row(&mut out, &[&r.item_id, &r.coder_id, matrix.label_set().name(r.label)]);
    }
    out
}

/// Writes `item_id,gold_label` CSV in the given item order.
pub fn write_gold_csv(items: &[String], labels: &[LabelCode], label_set: &LabelSet) -> String {
    let mut out = String::from("item_id,gold_label\n");
    for (item, &l) in items.iter().zip(labels) {
        push_csv_row(&mut out, &[item, label_set.name(l)]);
    }
    out
}

/// Appends one CSV row, quoting fields that need it.
pub fn push_csv_row(out: &mut String, fields: &[&str]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if f.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
}
