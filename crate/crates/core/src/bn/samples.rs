use crate::direction::Direction;
use crate::ingest::DirectionMatrix;

/// Column-major binary sample table used for counting.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    names: Vec<String>,
    columns: Vec<Vec<u8>>,
    rows: usize,
}

impl Samples {
    pub fn new(names: Vec<String>, columns: Vec<Vec<u8>>) -> Self {
        assert_eq!(names.len(), columns.len(), "one column per name");
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        assert!(
            columns.iter().flatten().all(|&s| s < 2),
            "binary states only"
        );
        Self {
            names,
            columns,
            rows,
        }
    }

    pub fn from_matrix(matrix: &DirectionMatrix) -> Self {
        let columns = (0..matrix.variables().len())
            .map(|v| matrix.column(v).map(|d| d.index() as u8).collect())
            .collect();
        Self::new(matrix.variables().to_vec(), columns)
    }

    /// Pairs every row with its predecessor: columns are the previous-day
    /// copies (named via `prev_name`) followed by the current-day columns.
    pub fn lagged(matrix: &DirectionMatrix, prev_name: impl Fn(&str) -> String) -> Self {
        let n = matrix.len();
        let vars = matrix.variables();
        let mut names: Vec<String> = vars.iter().map(|v| prev_name(v)).collect();
        names.extend(vars.iter().cloned());
        let mut columns = Vec::with_capacity(2 * vars.len());
        for v in 0..vars.len() {
            columns.push(
                (1..n)
                    .map(|t| matrix.row(t - 1)[v].index() as u8)
                    .collect(),
            );
        }
        for v in 0..vars.len() {
            columns.push((1..n).map(|t| matrix.row(t)[v].index() as u8).collect());
        }
        Self::new(names, columns)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, index: usize) -> &[u8] {
        &self.columns[index]
    }

    pub fn state(&self, row: usize, column: usize) -> Direction {
        Direction::from_index(self.columns[column][row] as usize)
    }
}
