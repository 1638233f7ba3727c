//! Default room, storage, category and asset tables.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AssetSpec, GenConfig, StorageType, CONFIG_FORMAT_VERSION};

pub const DEFAULT_ROOMS: [&str; 7] = [
    "kitchen",
    "living room",
    "bedroom",
    "garage",
    "bathroom",
    "closet",
    "dining room",
];

/// (label, shelf count range, volume range in liters)
const STORAGE_TYPES: [(&str, [u32; 2], [f64; 2]); 4] = [
    ("fridge", [3, 5], [300.0, 600.0]),
    ("cabinet", [3, 4], [150.0, 400.0]),
    ("shelves", [3, 5], [200.0, 500.0]),
    ("pantry", [4, 6], [500.0, 1000.0]),
];

/// Probability of each storage type being placed in each room, in
/// [`DEFAULT_ROOMS`] order.
const STORAGE_ROOM: [(&str, [f64; 7]); 4] = [
    ("fridge", [0.70, 0.05, 0.00, 0.15, 0.00, 0.00, 0.10]),
    ("cabinet", [0.30, 0.10, 0.05, 0.10, 0.35, 0.00, 0.10]),
    ("shelves", [0.05, 0.30, 0.25, 0.15, 0.05, 0.15, 0.05]),
    ("pantry", [0.60, 0.00, 0.00, 0.10, 0.00, 0.20, 0.10]),
];

/// Per category: probability that a storage of each type holds it, and the
/// six asset descriptions (the last one is held out as a test target).
#[rustfmt::skip]
const CATEGORIES: [(&str, [(&str, f64); 4], [&str; 6]); 26] = [
    ("dairy", [("fridge", 0.8), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.0)],
        ["Cheddar Cheese Block", "Whole Milk Carton", "Greek Yogurt Cup", "Salted Butter Stick", "Cream Cheese Tub", "Swiss Cheese Slices"]),
    ("veggies", [("fridge", 0.7), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.0)],
        ["Fresh Garlic Bulb", "Green Broccoli Head", "Baby Carrots Bag", "Red Bell Pepper", "Sweet Onion", "Leafy Spinach Bunch"]),
    ("fruits", [("fridge", 0.6), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.0)],
        ["Red Apple", "Ripe Banana Bunch", "Navel Orange", "Green Grapes", "Fresh Strawberries Box", "Yellow Lemon"]),
    ("meat", [("fridge", 0.5), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.0)],
        ["Sliced Turkey Pack", "Chicken Breast Tray", "Smoked Ham", "Ground Beef Pack", "Pork Sausage Links", "Bacon Strips"]),
    ("drinks", [("fridge", 0.6), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.2)],
        ["Cola Soda Can", "Orange Juice Bottle", "Sparkling Water Bottle", "Lemonade Jug", "Ginger Ale Can", "Apple Juice Box"]),
    ("condiments", [("fridge", 0.5), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.15)],
        ["Tomato Ketchup Bottle", "Yellow Mustard", "Mayonnaise Jar", "Hot Sauce Bottle", "Soy Sauce", "Pickle Relish Jar"]),
    ("cereal", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.5)],
        ["Corn Flakes Box", "Honey Oat Cereal", "Granola Clusters", "Rice Crisps Cereal", "Bran Flakes Box", "Frosted Wheat Cereal"]),
    ("pasta", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.5)],
        ["Spaghetti Noodles", "Penne Pasta Box", "Macaroni Elbows", "Egg Noodles Bag", "Lasagna Sheets", "Fusilli Pasta"]),
    ("canned goods", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.5)],
        ["Canned Capers", "Canned Tuna", "Canned Black Beans", "Canned Tomato Soup", "Canned Corn", "Canned Peaches"]),
    ("snacks", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.5)],
        ["Salted Crackers", "Potato Chips Bag", "Pretzel Twists", "Chocolate Cookies", "Salted Peanuts Jar", "Popcorn Bag"]),
    ("coffee", [("fridge", 0.0), ("cabinet", 0.15), ("shelves", 0.0), ("pantry", 0.4)],
        ["Nescafe Coffee Jar", "Ground Coffee Bag", "Espresso Beans", "Instant Coffee Tin", "Decaf Coffee Pods", "Dark Roast Coffee"]),
    ("tea", [("fridge", 0.0), ("cabinet", 0.15), ("shelves", 0.0), ("pantry", 0.4)],
        ["Jasmine Green Tea", "Black Tea Bags", "Chamomile Tea Box", "Earl Grey Tea", "Mint Herbal Tea", "Oolong Tea Tin"]),
    ("baking", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.35)],
        ["Flour Sack", "Granulated Sugar Bag", "Baking Soda Box", "Vanilla Extract", "Cocoa Powder Tin", "Yeast Packets"]),
    ("spices", [("fridge", 0.0), ("cabinet", 0.15), ("shelves", 0.0), ("pantry", 0.35)],
        ["Ground Cinnamon Jar", "Black Pepper Grinder", "Dried Oregano", "Paprika Spice Jar", "Sea Salt Shaker", "Cumin Seeds"]),
    ("protein", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.0), ("pantry", 0.3)],
        ["Whey Protein Powder", "Protein Bar Box", "Peanut Butter Jar", "Almond Protein Shake", "Soy Protein Tub", "Chocolate Protein Powder"]),
    ("medicine", [("fridge", 0.0), ("cabinet", 0.45), ("shelves", 0.0), ("pantry", 0.0)],
        ["Pain Relief Tablets", "Cough Syrup Bottle", "Allergy Pills Box", "Antacid Chewables", "Cold Medicine", "Bandage Kit"]),
    ("vitamins", [("fridge", 0.0), ("cabinet", 0.4), ("shelves", 0.05), ("pantry", 0.0)],
        ["Krill Oil Pills Blue", "Multivitamin Bottle", "Vitamin C Tablets", "Fish Oil Capsules", "Calcium Chews", "Vitamin D Drops"]),
    ("hair products", [("fridge", 0.0), ("cabinet", 0.35), ("shelves", 0.1), ("pantry", 0.0)],
        ["Hair Product Tube", "Herbal Shampoo Bottle", "Hair Conditioner", "Styling Gel Jar", "Hair Spray Can", "Curl Cream"]),
    ("soap", [("fridge", 0.0), ("cabinet", 0.4), ("shelves", 0.0), ("pantry", 0.0)],
        ["Lavender Hand Soap", "Bar Soap Pack", "Body Wash Bottle", "Liquid Soap Refill", "Oatmeal Soap Bar", "Foaming Hand Soap"]),
    ("cleaning supplies", [("fridge", 0.0), ("cabinet", 0.4), ("shelves", 0.1), ("pantry", 0.0)],
        ["Glass Cleaner Spray", "Dish Detergent Bottle", "Bleach Jug", "Scrub Sponges Pack", "Floor Cleaner", "Laundry Detergent"]),
    ("hats", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.35), ("pantry", 0.0)],
        ["Handmade Brown Hat", "Wool Winter Hat", "Baseball Cap", "Straw Sun Hat", "Knit Beanie", "Felt Fedora Hat"]),
    ("shoes", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.35), ("pantry", 0.0)],
        ["Running Shoes", "Leather Boots", "Canvas Sneakers", "Wool Slippers", "Dress Shoes", "Rain Boots"]),
    ("board games", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.35), ("pantry", 0.0)],
        ["Chess Board Game", "Strategy Board Game", "Word Puzzle Game", "Trivia Card Game", "Dice Board Game", "Jigsaw Puzzle Box"]),
    ("books", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.45), ("pantry", 0.0)],
        ["Mystery Novel", "Cookbook Hardcover", "Science Textbook", "Poetry Paperback", "Travel Guide Book", "Comic Book"]),
    ("toys", [("fridge", 0.0), ("cabinet", 0.0), ("shelves", 0.35), ("pantry", 0.0)],
        ["Toy Race Car", "Stuffed Teddy Bear", "Building Blocks Set", "Toy Robot", "Rubber Duck Toy", "Plush Bunny"]),
    ("tools", [("fridge", 0.0), ("cabinet", 0.1), ("shelves", 0.35), ("pantry", 0.0)],
        ["Claw Hammer", "Screwdriver Set", "Adjustable Wrench", "Tape Measure", "Cordless Drill", "Pliers Set"]),
];

fn asset_name(description: &str) -> String {
    description
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

/// Asset catalog with seeded synthetic front-view extents.
pub fn default_assets() -> Vec<AssetSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA55E7);
    let mut out = Vec::new();
    for (category, _, descriptions) in CATEGORIES.iter() {
        for (i, d) in descriptions.iter().enumerate() {
            out.push(AssetSpec {
                name: asset_name(d),
                description: d.to_string(),
                category: category.to_string(),
                w: round4(rng.gen_range(0.06..0.18)),
                h: round4(rng.gen_range(0.15..0.55)),
                held_out: i == descriptions.len() - 1,
            });
        }
    }
    out
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

pub fn default_config() -> GenConfig {
    let storage_types = STORAGE_TYPES
        .iter()
        .map(|(label, shelves, volume)| StorageType {
            label: label.to_string(),
            shelf_count: *shelves,
            volume_liters: *volume,
        })
        .collect();
    let storage_room_prob = STORAGE_ROOM
        .iter()
        .map(|(s, row)| {
            let inner: BTreeMap<String, f64> = DEFAULT_ROOMS
                .iter()
                .zip(row)
                .map(|(r, p)| (r.to_string(), *p))
                .collect();
            (s.to_string(), inner)
        })
        .collect();
    let category_storage_prob = CATEGORIES
        .iter()
        .map(|(c, row, _)| {
            let inner: BTreeMap<String, f64> =
                row.iter().map(|(s, p)| (s.to_string(), *p)).collect();
            (c.to_string(), inner)
        })
        .collect();
    GenConfig {
        format_version: CONFIG_FORMAT_VERSION,
        name: "default-train".into(),
        seed: 0,
        room_types: DEFAULT_ROOMS.iter().map(|s| s.to_string()).collect(),
        storage_types,
        categories: CATEGORIES.iter().map(|(c, _, _)| c.to_string()).collect(),
        storage_room_prob,
        category_storage_prob,
        assets: default_assets(),
        objects_per_shelf: [4, 15],
        categories_per_shelf: [1, 2],
    }
}
