use std::path::{Path, PathBuf};

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/snapshots")
}

// Features of the bundled fixtures, recomputed independently with exact
// rational arithmetic (50-digit decimal square roots) and rounded once.
pub const RMS: [[f64; 4]; 6] = [
    [0.30072163207857194, 0.3499739276003285, 0.36360280526970634, 0.35555748480379373],
    [0.26644699285223694, 0.26229539645216804, 0.3890743823486712, 0.3146174264086464],
    [0.2928436016033132, 0.3409666405969945, 0.4356231169256287, 0.39938687384539817],
    [0.29088700555370295, 0.3336144855967738, 0.5107571585401423, 0.3921061718463508],
    [0.29111337997419495, 0.4520370560031556, 0.47978471734727024, 0.5699986842090077],
    [0.4655491381154088, 0.28356414618212933, 0.39861259388032383, 0.5369351683397168],
];
pub const KURTOSIS: [[f64; 4]; 6] = [
    [1.9234960231664338, 1.3551670957193158, 1.1255571686250012, 2.1848394867289933],
    [1.6820366233406199, 1.5297368468205905, 1.2786757106986768, 1.7197745862116134],
    [1.2920374072919123, 1.471285338267289, 1.2311776811076642, 1.2338159231959387],
    [2.112066963392729, 1.347642971001158, 0.9527007260286697, 1.1724906899102985],
    [1.579185668052247, 2.726798597197568, 1.155898472008454, 1.0137437931840194],
    [0.9298502260303861, 1.166616205526168, 1.0617472982015346, 1.389781374418588],
];
pub const PEAK: [[f64; 4]; 6] = [
    [0.476, 0.499, 0.53, 0.556],
    [0.484, 0.503, 0.6, 0.516],
    [0.461, 0.592, 0.621, 0.623],
    [0.503, 0.541, 0.669, 0.647],
    [0.572, 0.615, 0.7, 0.74],
    [0.59, 0.413, 0.634, 0.756],
];
pub const CREST: [[f64; 4]; 6] = [
    [1.582859193433852, 1.4258204987482948, 1.4576345185424704, 1.563741515121854],
    [1.816496387588848, 1.9176852007455139, 1.5421215767999512, 1.6400871556611882],
    [1.5742191308808995, 1.7362402344213914, 1.4255441822799766, 1.5598910249643356],
    [1.729193777640704, 1.6216322232898621, 1.3098201147334891, 1.6500632901374754],
    [1.9648701823691634, 1.3605079314464583, 1.4589876973787328, 1.2982486109189968],
    [1.2673205719773881, 1.4564605771236532, 1.5905167316172326, 1.4079912149127132],
];
pub const STAMPS: [&str; 6] = [
    "2004-02-12T10:32:39",
    "2004-02-12T10:42:39",
    "2004-02-12T10:52:39",
    "2004-02-14T10:52:39",
    "2004-02-14T11:02:39",
    "2004-02-14T11:12:39",
];

