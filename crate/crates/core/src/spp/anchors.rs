use super::PyramidConfig;
use crate::error::Result;
use crate::segment::Segment;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub level: usize,
    pub location: usize,
    pub center: f64,
    pub length: f64,
}

impl Anchor {
    pub fn segment(&self) -> Segment {
        Segment::span(self.center - 0.5 * self.length, self.center + 0.5 * self.length)
    }
}

/// Anchors ordered by level, then location, then scale: the same order in
/// which the heads emit their outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorGrid {
    pub anchors: Vec<Anchor>,
    pub level_lengths: Vec<usize>,
}

impl AnchorGrid {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.anchors.iter().map(Anchor::segment).collect()
    }
}

/// Unclipped anchors: centre `(location + 0.5) * stride`, lengths `stride * scale`.
pub fn generate_anchors(cfg: &PyramidConfig, l_s: usize) -> Result<AnchorGrid> {
    let level_lengths = cfg.level_lengths(l_s)?;
    let mut anchors = Vec::with_capacity(level_lengths.iter().sum::<usize>() * cfg.anchors_per_location());
    for (level, &len) in level_lengths.iter().enumerate() {
        let stride = cfg.level_stride(level) as f64;
        for location in 0..len {
            let center = (location as f64 + 0.5) * stride;
            for scale in &cfg.scales {
                anchors.push(Anchor { level, location, center, length: stride * scale });
            }
        }
    }
    Ok(AnchorGrid { anchors, level_lengths })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_centres() {
        let cfg = PyramidConfig::default();
        let grid = generate_anchors(&cfg, 64).unwrap();
        assert_eq!(grid.level_lengths, vec![8, 4, 2]);
        assert_eq!(grid.len(), 8 * 3 + 4 * 3 + 2 * 3);
        assert_eq!(grid.anchors[0].center, 4.0);
        assert_eq!(grid.anchors[0].length, 8.0);
    }

    #[test]
    fn level_shares_length_set() {
        let cfg = PyramidConfig::default();
        let grid = generate_anchors(&cfg, 256).unwrap();
        for level in 0..3 {
            let lens: Vec<Vec<f64>> = grid
                .anchors
                .iter()
                .filter(|a| a.level == level)
                .collect::<Vec<_>>()
                .chunks(3)
                .map(|c| c.iter().map(|a| a.length).collect())
                .collect();
            assert!(lens.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn indivisible_length_rejected() {
        assert!(generate_anchors(&PyramidConfig::default(), 48).is_err());
    }
}
