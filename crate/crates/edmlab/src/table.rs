use serde::ser::{Serialize, SerializeMap, Serializer};

/// A tidy table with a fixed header; cells are stored pre-formatted so the
/// CSV bytes are fully determined at construction.
///
/// Floats print the shortest string that round-trips (see [`Cell`]), so
/// equal values always serialize identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Formats each argument with [`Cell`] into a row.
#[macro_export]
macro_rules! row {
    ($($cell:expr),* $(,)?) => {
        vec![$($crate::table::Cell::cell(&$cell)),*]
    };
}

/// Text of one CSV cell or summary value.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    /// Plain decimal in the usual range, exponent form for very small or
    /// large magnitudes (a p-value of 1e-300 would otherwise be 300 digits).
    fn cell(&self) -> String {
        let a = self.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
            format!("{self:e}")
        } else {
            self.to_string()
        }
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {
        $(impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_cell!(usize, u64, u32, u8, i64, i32, i8, bool, char, str, String);

impl<T: Cell + ?Sized> Cell for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Panics on a width mismatch; rows are built in code, never parsed.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header {:?}", self.header);
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    /// A column parsed as floats; `None` if absent or any cell is not a number.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.iter().map(|s| s.parse().ok()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads the unquoted CSV produced by [`Table::to_csv`] (and by the
    /// core crate's trajectory writer).
    pub fn from_csv(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines.next()?.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines {
            let r: Vec<String> = line.split(',').map(str::to_string).collect();
            if r.len() != header.len() {
                return None;
            }
            rows.push(r);
        }
        Some(Table { header, rows })
    }
}

/// Key metrics of a run, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary(Vec<(String, String)>);

impl Summary {
    pub fn put(&mut self, key: &str, value: impl Cell) {
        self.0.push((key.to_string(), value.cell()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["metric", "value"]);
        for (k, v) in &self.0 {
            t.push(vec![k.clone(), v.clone()]);
        }
        t
    }
}

/// Serializes as a JSON object whose keys keep insertion order.
impl Serialize for Summary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["K", "bit_error_rate"]);
        t.push(row![10, 0.0]);
        t.push(row![15, 0.0025]);
        assert_eq!(t.to_csv(), "K,bit_error_rate\n10,0\n15,0.0025\n");
        assert_eq!(t.column_f64("K").unwrap(), vec![10.0, 15.0]);
        assert!(t.column("missing").is_none());
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn push_rejects_ragged_rows() {
        Table::new(&["a", "b"]).push(row![1]);
    }

    #[test]
    fn summary_lookup_keeps_order() {
        let mut s = Summary::default();
        s.put("best_H", -1.0);
        s.put("cut", 2.0);
        assert_eq!(s.get("best_H"), Some("-1"));
        assert_eq!(s.get_f64("cut"), Some(2.0));
        assert_eq!(s.to_table().to_csv(), "metric,value\nbest_H,-1\ncut,2\n");
    }

    #[test]
    fn extreme_floats_use_exponents() {
        assert_eq!(1.5e-300.cell(), "1.5e-300");
        assert_eq!(2e20.cell(), "2e20");
        assert_eq!(0.0.cell(), "0");
        assert_eq!(0.25.cell(), "0.25");
        assert_eq!(f64::NAN.cell(), "NaN");
    }

    proptest! {
        #[test]
        fn float_cells_round_trip(xs in proptest::collection::vec(prop_oneof![-1e300f64..1e300, -1e-200f64..1e-200], 1..20)) {
            let mut t = Table::new(&["x"]);
            for x in &xs {
                t.push(row![x]);
            }
            let back = Table::from_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(back.column_f64("x").unwrap(), xs);
        }
    }
}
