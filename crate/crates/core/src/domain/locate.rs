use super::Point;

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug, Clone)]
pub(crate) struct TriangleGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl TriangleGrid {
    pub(crate) fn new(vertices: &[Point], triangles: &[[usize; 3]]) -> Self {
        let (lo, hi) = super::bbox(vertices);
        let w = (hi[0] - lo[0]).max(1e-300);
        let h = (hi[1] - lo[1]).max(1e-300);
        let target = (triangles.len() as f64).sqrt().ceil().max(1.0);
        let cell = (w.max(h) / target).max(1e-300);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut grid = TriangleGrid {
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (t, tri) in triangles.iter().enumerate() {
            let mut tlo = [f64::INFINITY; 2];
            let mut thi = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for d in 0..2 {
                    tlo[d] = tlo[d].min(vertices[v][d]);
                    thi[d] = thi[d].max(vertices[v][d]);
                }
            }
            let (i0, j0) = grid.cell_of(tlo);
            let (i1, j1) = grid.cell_of(thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.buckets[j * nx + i].push(t);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    /// Triangles whose bounding box may contain `p` (a slight tolerance is
    /// applied by also visiting neighbouring cells when `p` sits on a cell edge).
    pub(crate) fn candidates(&self, p: Point) -> impl Iterator<Item = usize> + '_ {
        let eps = 1e-9 * self.cell;
        let mut cells = Vec::with_capacity(4);
        for dx in [-eps, eps] {
            for dy in [-eps, eps] {
                let c = self.cell_of([p[0] + dx, p[1] + dy]);
                if !cells.contains(&c) {
                    cells.push(c);
                }
            }
        }
        let (lo_x, lo_y) = (self.origin[0] - eps, self.origin[1] - eps);
        let hi_x = self.origin[0] + self.nx as f64 * self.cell + eps;
        let hi_y = self.origin[1] + self.ny as f64 * self.cell + eps;
        let inside = p[0] >= lo_x && p[0] <= hi_x && p[1] >= lo_y && p[1] <= hi_y;
        let mut out: Vec<usize> = if inside {
            cells
                .into_iter()
                .flat_map(|(i, j)| self.buckets[j * self.nx + i].iter().copied())
                .collect()
        } else {
            Vec::new()
        };
        out.sort_unstable();
        out.dedup();
        out.into_iter()
    }
}
