#![allow(dead_code)]

use hms_core::graph::{NodeId, Placement, SceneGraph};
use hms_core::TargetSpec;

pub fn place(cx: f64, w: f64, h: f64, depth: f64, category: &str) -> Placement {
    Placement {
        cx,
        cy: h / 2.0,
        w,
        h,
        depth,
        category: category.to_string(),
    }
}

/// Hand-built house whose ids are fixed by insertion order.
pub struct Fixture {
    pub graph: SceneGraph,
    pub kitchen: NodeId,
    pub garage: NodeId,
    pub fridge: NodeId,
    pub pantry: NodeId,
    pub cabinet: NodeId,
    /// Fridge shelf holding the target behind one bigger object.
    pub shelf_a: NodeId,
    pub shelf_b: NodeId,
    pub shelf_c: NodeId,
    pub shelf_d: NodeId,
    pub target: NodeId,
    pub occluder: NodeId,
    pub bystander: NodeId,
}

impl Fixture {
    pub fn new() -> Self {
        let mut g = SceneGraph::new("house");
        let kitchen = g.add_room("kitchen").unwrap();
        let garage = g.add_room("garage").unwrap();
        let fridge = g.add_storage(kitchen, "fridge", 450.0).unwrap();
        let pantry = g.add_storage(kitchen, "pantry", 700.0).unwrap();
        let cabinet = g.add_storage(garage, "cabinet", 200.0).unwrap();
        let shelf_a = g.add_shelf(fridge, "shelf").unwrap();
        let shelf_b = g.add_shelf(fridge, "shelf").unwrap();
        let shelf_c = g.add_shelf(pantry, "shelf").unwrap();
        let shelf_d = g.add_shelf(cabinet, "shelf").unwrap();
        let target = g
            .add_object(shelf_a, "dairy", "Swiss Cheese Slices", place(0.5, 0.1, 0.2, 0.5, "dairy"))
            .unwrap();
        let occluder = g
            .add_object(shelf_a, "dairy", "Whole Milk Carton", place(0.5, 0.14, 0.3, 0.0, "dairy"))
            .unwrap();
        let bystander = g
            .add_object(shelf_a, "drinks", "Cola Soda Can", place(0.15, 0.1, 0.3, 0.0, "drinks"))
            .unwrap();
        g.add_object(shelf_b, "meat", "Smoked Ham", place(0.5, 0.12, 0.2, 0.0, "meat"))
            .unwrap();
        g.add_object(shelf_c, "cereal", "Corn Flakes Box", place(0.5, 0.12, 0.3, 0.0, "cereal"))
            .unwrap();
        g.add_object(shelf_d, "tools", "Claw Hammer", place(0.5, 0.15, 0.2, 0.0, "tools"))
            .unwrap();
        g.validate().unwrap();
        Fixture {
            graph: g,
            kitchen,
            garage,
            fridge,
            pantry,
            cabinet,
            shelf_a,
            shelf_b,
            shelf_c,
            shelf_d,
            target,
            occluder,
            bystander,
        }
    }

    pub fn target_spec(&self) -> TargetSpec {
        let n = self.graph.node(self.target).unwrap();
        TargetSpec {
            object_id: self.target,
            description: n.description.clone(),
            category: n.label.clone(),
        }
    }
}
