//! 8-connected component labelling and outer-border following.

/// Binary mask in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Label value in the label image (1-based).
    pub label: u32,
    pub count: usize,
    pub centroid: [f64; 2],
    /// First pixel in raster order; its west neighbour is background.
    pub start: (usize, usize),
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Label 8-connected foreground regions. Returns the label image (0 =
/// background) and the components in label order.
pub fn label_components(mask: &Mask) -> (Vec<u32>, Vec<Component>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.data[y * w + x] || labels[y * w + x] != 0 {
                continue;
            }
            let label = comps.len() as u32 + 1;
            let (mut count, mut sx, mut sy) = (0usize, 0f64, 0f64);
            labels[y * w + x] = label;
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                count += 1;
                sx += cx as f64;
                sy += cy as f64;
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if mask.get(nx, ny) {
                        let idx = ny as usize * w + nx as usize;
                        if labels[idx] == 0 {
                            labels[idx] = label;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            comps.push(Component {
                label,
                count,
                centroid: [sx / count as f64, sy / count as f64],
                start: (x, y),
            });
        }
    }
    (labels, comps)
}

/// Largest component with more than `min_count` pixels; ties go to the one
/// whose centroid is nearest `center`.
pub fn select_component(
    comps: &[Component],
    min_count: usize,
    center: [f64; 2],
) -> Option<&Component> {
    let dist = |c: &Component| (c.centroid[0] - center[0]).hypot(c.centroid[1] - center[1]);
    comps
        .iter()
        .filter(|c| c.count > min_count)
        .min_by(|a, b| b.count.cmp(&a.count).then(dist(a).total_cmp(&dist(b))))
}

/// Outer boundary of the component with `label`, traced clockwise by Moore
/// neighbour following from its first raster pixel.
pub fn trace_outer_boundary(
    labels: &[u32],
    width: usize,
    height: usize,
    comp: &Component,
) -> Vec<(usize, usize)> {
    let inside = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && labels[y as usize * width + x as usize] == comp.label
    };
    let dir_of = |dx: i64, dy: i64| {
        NEIGHBORS_8
            .iter()
            .position(|&d| d == (dx, dy))
            .expect("unit step")
    };

    let start = (comp.start.0 as i64, comp.start.1 as i64);
    let mut boundary = vec![comp.start];
    // Backtrack starts at the west neighbour, which is background.
    let mut p = start;
    let mut back = 4usize;
    let mut first_move: Option<(i64, i64)> = None;
    let limit = 4 * comp.count + 16;
    for _ in 0..limit {
        let mut next = None;
        for i in 1..=8 {
            let d = (back + i) % 8;
            let q = (p.0 + NEIGHBORS_8[d].0, p.1 + NEIGHBORS_8[d].1);
            if inside(q.0, q.1) {
                let prev = (back + i - 1) % 8;
                let b = (p.0 + NEIGHBORS_8[prev].0, p.1 + NEIGHBORS_8[prev].1);
                next = Some((q, b));
                break;
            }
        }
        let Some((q, b)) = next else {
            break; // isolated pixel
        };
        if p == start {
            // Leaving the start pixel the same way twice closes the trace.
            match first_move {
                Some(m) if m == q => break,
                None => first_move = Some(q),
                _ => {}
            }
        }
        back = dir_of(b.0 - q.0, b.1 - q.1);
        p = q;
        if p != start {
            boundary.push((p.0 as usize, p.1 as usize));
        }
    }
    boundary
}
