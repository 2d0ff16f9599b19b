use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-vertex label sequences `u_t(v)`, stored as change events.
///
/// A lookup at `t` returns the value of the latest event with time `<= t`,
/// or zeros when there is none. Time 0 is accepted as the initial condition
/// before the first step.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelStream {
    dim: usize,
    zero: Vec<f64>,
    events: Vec<Vec<(usize, Vec<f64>)>>,
}

impl LabelStream {
    pub fn zeros(num_vertices: usize, dim: usize) -> Self {
        Self {
            dim,
            zero: vec![0.0; dim],
            events: vec![Vec::new(); num_vertices],
        }
    }

    /// Builds a binary stream from the time at which each vertex switches
    /// to 1 (`None` means never).
    pub fn from_switch_times(switch_times: &[Option<usize>]) -> Self {
        let mut s = Self::zeros(switch_times.len(), 1);
        for (v, t) in switch_times.iter().enumerate() {
            if let Some(t) = t {
                s.events[v].push((*t, vec![1.0]));
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.events.len()
    }

    /// Sets the label of `vertex` from `time` on, overwriting any event at the
    /// same time.
    pub fn set(&mut self, vertex: usize, time: usize, value: &[f64]) -> Result<()> {
        if value.len() != self.dim {
            return Err(Error::LabelDimension {
                expected: self.dim,
                actual: value.len(),
            });
        }
        let num_vertices = self.num_vertices();
        let events = self.events.get_mut(vertex).ok_or(Error::VertexOutOfRange {
            vertex,
            num_vertices,
        })?;
        match events.binary_search_by_key(&time, |(t, _)| *t) {
            Ok(i) => events[i].1 = value.to_vec(),
            Err(i) => events.insert(i, (time, value.to_vec())),
        }
        Ok(())
    }

    pub fn value_at(&self, vertex: usize, t: usize) -> &[f64] {
        let events = &self.events[vertex];
        match events.partition_point(|(time, _)| *time <= t) {
            0 => &self.zero,
            i => &events[i - 1].1,
        }
    }

    /// The `|V| × U` input matrix at time `t`.
    pub fn matrix_at(&self, t: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.num_vertices(), self.dim);
        for v in 0..self.num_vertices() {
            for (j, &x) in self.value_at(v, t).iter().enumerate() {
                m[(v, j)] = x;
            }
        }
        m
    }

    /// All change events as `(vertex, time, value)`.
    pub fn events(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        self.events
            .iter()
            .enumerate()
            .flat_map(|(v, ev)| ev.iter().map(move |(t, x)| (v, *t, x.as_slice())))
    }

    pub(crate) fn last_event_time(&self) -> Option<usize> {
        self.events
            .iter()
            .filter_map(|ev| ev.last().map(|e| e.0))
            .max()
    }

    pub(crate) fn permuted(&self, perm: &[usize]) -> Self {
        let mut events = vec![Vec::new(); self.events.len()];
        for (v, ev) in self.events.iter().enumerate() {
            events[perm[v]] = ev.clone();
        }
        Self {
            dim: self.dim,
            zero: self.zero.clone(),
            events,
        }
    }

    /// Fraction of vertices whose first label component is nonzero at `t`.
    pub fn active_fraction(&self, t: usize) -> f64 {
        let n = self.num_vertices();
        if n == 0 {
            return 0.0;
        }
        let active = (0..n).filter(|&v| self.value_at(v, t)[0] != 0.0).count();
        active as f64 / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_returns_last_value_at_or_before() {
        let mut s = LabelStream::zeros(2, 1);
        s.set(0, 3, &[1.0]).unwrap();
        s.set(0, 5, &[0.5]).unwrap();
        assert_eq!(s.value_at(0, 1), &[0.0]);
        assert_eq!(s.value_at(0, 3), &[1.0]);
        assert_eq!(s.value_at(0, 4), &[1.0]);
        assert_eq!(s.value_at(0, 9), &[0.5]);
        assert_eq!(s.value_at(1, 9), &[0.0]);
    }

    #[test]
    fn set_overwrites_same_time() {
        let mut s = LabelStream::zeros(1, 2);
        s.set(0, 2, &[1.0, 2.0]).unwrap();
        s.set(0, 2, &[3.0, 4.0]).unwrap();
        assert_eq!(s.events().count(), 1);
        assert_eq!(s.value_at(0, 2), &[3.0, 4.0]);
    }

    #[test]
    fn set_rejects_bad_input() {
        let mut s = LabelStream::zeros(1, 1);
        assert!(matches!(
            s.set(0, 1, &[1.0, 2.0]),
            Err(Error::LabelDimension { .. })
        ));
        assert!(matches!(
            s.set(4, 1, &[1.0]),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn initial_condition_at_time_zero() {
        let s = LabelStream::from_switch_times(&[Some(0), Some(2), None]);
        let m = s.matrix_at(1);
        assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(s.active_fraction(2), 2.0 / 3.0);
    }
}
