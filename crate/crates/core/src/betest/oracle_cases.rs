// Frozen from a 50-digit mpmath evaluation of the textbook formulas.
// (x, y, t, df, p)
const WELCH_CASES: &[(&[f64], &[f64], f64, f64, f64)] = &[
    (&[2.1, 2.5, 2.3, 2.2], &[3.0, 3.2, 2.9, 3.1], -7.2400401807021636, 5.5846153846153846, 0.00048627527965464162),
    (&[-1.587, -3.432, -1.284, 0.471], &[3.336, 3.995, 5.096, 5.786, 5.852, 6.467, 6.647, 4.869, 4.022, 3.914], -7.3400675992341989, 4.3375392830787461, 0.0013304798295806219),
    (&[-0.644, 0.8, -0.893, -1.1, -0.939, -0.612, -0.948, 0.438, 1.264, 0.504, -0.127, -0.203], &[5.2, 6.177], -10.939211315341355, 1.4731513370619223, 0.021814310482806504),
    (&[-5.112, -1.29, 3.87, -3.279], &[0.071, 1.651, 0.883, 1.53], -1.2609712532326757, 3.2096043444143849, 0.29118548919680065),
    (&[-0.792, 1.218, -2.313], &[2.125, 1.349, 1.123, 1.92], -2.1521136348535793, 2.2135072113559519, 0.15188921799305208),
    (&[-0.348, -0.423, -1.014, 2.874, -1.083, -4.716, -0.213, -0.831, 2.109, -0.486], &[2.323, 0.143, 1.869], -2.0166700355605318, 6.2276254715804927, 0.088582204308286938),
    (&[0.47, -1.004, 0.44, -0.326, 0.376, -0.331, -0.694, 0.314, 0.709], &[-1.626, 0.469, -0.361, 0.634, 1.206, 0.87, -1.401, -0.018, 1.702, -0.96, 0.644], -0.28917316594247497, 16.072962504087715, 0.77614547760543705),
    (&[0.746, -1.145, -0.064, 0.087, 0.922], &[1.058, -0.43], -0.24708448212726285, 1.5183709905692887, 0.83409713004655628),
    (&[-0.375, 0.258], &[5.632, 3.77, 2.994, 5.129, 5.393, 4.76, 4.385, 5.769, 5.072, 5.632, 6.422], -11.686010316319005, 3.2440643590896899, 0.00092350888825460126),
    (&[0.025, -0.11, -0.029, -1.326, -0.514, 0.881, -0.438, 0.45, 0.58, -0.257], &[1.67, -1.124, 1.14, 0.394, 2.192, 1.748, 2.07, 1.962, 3.166, 3.355], -3.7806216611951766, 12.964167002577462, 0.0023006878612532672),
    (&[1.503, -2.874, 2.205, -1.545, 0.135, 5.484], &[0.086, 0.183, -0.222, 2.015, 2.141, 2.206, 0.132, 0.524], -0.051514965954606524, 5.9417201059517464, 0.96060332268144301),
    (&[-0.109, 1.536, -1.843, 2.08, -0.503, 0.012, -0.879, -0.759, 1.576, 1.097], &[1.255, 1.406, 2.804, 1.022, 0.776, 0.678, 2.5, 0.569, 1.117, 0.067, 0.594], -1.9738949980845397, 15.107953617482229, 0.066969260754313799),
    (&[-0.564, -0.056, -0.379, -0.254, 0.358, -0.317, 0.393, 0.477, 0.022], &[-0.983, 0.023, 0.071], 0.71305051432019978, 2.5553030535434369, 0.53535465062467065),
    (&[-0.176, 0.418, 1.291, 0.216, 0.073, -0.326, 0.152, 0.59], &[0.652, 1.486], -1.7406200741887298, 1.3913612239093682, 0.27517455485224667),
    (&[0.143, 0.371, -0.158, 0.313, 0.612, -0.347, 0.184, 0.141, 0.315], &[1.359, -0.175, -0.214, 0.858], -0.70289966370968731, 3.3645548185649283, 0.52767046334469017),
    (&[-0.013, -0.369, 0.821, 1.66, -0.418, -0.409, -0.116, -1.266, -0.859, 0.108], &[0.013, 0.75, 0.827, 0.569, 0.304, -0.564, -0.609, 1.509, -0.004, -0.183, -0.335, 0.192], -0.91612810078376589, 16.50937155690778, 0.37278843091194633),
    (&[0.636, 0.589, -0.124, 0.017, 0.705, -0.267, -0.716, -0.188, -0.129, 0.373, 0.108], &[2.909, -0.239], -0.78734472074865854, 1.0144246527268391, 0.57386780560228733),
    (&[0.281, -0.23, 0.12, 0.863, 0.942, -0.467, -1.993, -1.545, 0.073], &[-0.162, -0.826, 0.822, 0.287, -0.376], -0.3816285884113668, 11.609442746587724, 0.70962975920182378),
    (&[4.101, -0.036, 6.417, -5.052, 1.422, 1.437, 2.532, -1.776], &[-0.778, 0.015, 0.092, 1.067, 1.542], 0.56629497115455907, 8.4316305176390756, 0.58594712642824866),
    (&[-0.564, 0.311, -0.625, -0.212, 0.244, -0.414, 0.577, 0.61], &[-1.589, 0.468, -0.173, 0.312, -1.314, -0.082], 0.98684003029250299, 7.583779077146381, 0.35415423849735928),
    (&[-0.215, -0.258, -0.221], &[-0.177, 0.317, 0.589], -2.1118827327306392, 2.0143856950730824, 0.16818356147798429),
    (&[-1.006, -0.155, 0.016, -0.058, 0.923], &[-0.097, 1.533, 0.946, 1.156, 0.525, -0.567, -1.716], -0.58992338644053904, 9.8475354526323025, 0.56853010797569863),
];
// (groups, F, df between, df within, p)
const ANOVA_CASES: &[(&[&[f64]], f64, f64, f64, f64)] = &[
    (&[&[0.634, 0.578, 0.512, -0.16, -0.951, -0.895, -1.932], &[2.177, 0.248, 1.434, 0.305, 1.332, 0.038, 1.41, 1.936], &[-0.68, -1.138], &[0.493, 0.368, 2.479, 0.032]], 4.7380785202400406, 3.0, 17.0, 0.014022953584219934),
    (&[&[-0.004, 0.139], &[-1.526, 1.506, 2.524], &[1.504, 0.273, -1.433, 1.073, 3.988, 2.06, 0.297, -0.346], &[0.546, -0.345, 3.662, 4.666, 2.577]], 0.89937712955895678, 3.0, 14.0, 0.46602879836232098),
    (&[&[-1.106, 1.08, 0.22, -1.057, 1.474, -0.492, 1.165, -1.409], &[2.189, 0.067, -0.865, 2.061, -0.493, 1.449, -0.925], &[1.252, -0.471, 0.162, 1.402, 0.259, 1.235]], 0.66097943306439927, 2.0, 18.0, 0.52843572068792312),
    (&[&[0.648, -0.694, -0.683, -0.504, -1.34, -1.331, 0.266], &[0.077, 0.239, 0.348, 0.256], &[-0.041, 0.241, 4.189, 0.681, -0.075, 1.234], &[-2.045, 1.434], &[0.429, 0.661, 3.025, 0.258, -0.535, 7.08, 5.294]], 2.3094396519482409, 4.0, 21.0, 0.091534790048267083),
    (&[&[-0.23, 0.135, 1.835], &[0.615, 1.682, 0.236, 0.393, -0.066], &[0.3, 2.236], &[2.455, 1.472], &[0.078, 0.97, 0.369, 1.33, 1.478, 1.298, 5.47]], 0.70559220642069747, 4.0, 14.0, 0.60121566466187169),
    (&[&[-1.02, -0.297, 0.626, 0.42], &[2.251, 1.562, 0.032, 0.921, 0.625, 1.292, -2.437, 0.033], &[3.632, 1.536, 3.059, 1.811, -0.372, 0.811, -0.043, -0.733], &[4.563, -0.203]], 1.1682529329583695, 3.0, 18.0, 0.34933346301824397),
    (&[&[-0.728, 0.047, 1.356, -0.595], &[-1.751, -0.242], &[2.159, -0.451]], 1.1836232978251279, 2.0, 5.0, 0.37945649769906864),
    (&[&[-0.133, 0.158, -0.169, 1.014, -0.64], &[2.864, 0.862, 0.034, 0.314, 0.703, 0.113, 0.793, 1.327], &[-0.614, 0.055, 0.442, 0.592, 0.127, 0.472, 0.606]], 2.6003775055512119, 2.0, 17.0, 0.10344035558797404),
    (&[&[0.295, 1.293, 0.51, -0.058], &[0.394, 0.375], &[0.157, 1.676, -1.156, 1.426, -1.243, 2.792], &[-0.701, -0.191, 5.774], &[1.673, 1.026, 6.031, -1.101, 0.637]], 0.32582569933941015, 4.0, 15.0, 0.85628314967593732),
    (&[&[0.364, 1.04, -1.236, 1.38, -0.011, 1.562, 1.125, -0.816], &[0.214, 0.441, 0.764, 0.194, 0.214, -0.824], &[-1.073, -0.064, 2.277, -0.266, 1.888, 0.326], &[0.626, 1.753, 0.826, 2.262, 0.651]], 1.1659825692812844, 3.0, 21.0, 0.34625901183194964),
    (&[&[2.165, 0.039, 1.114, 2.341, -0.592, -0.692, 0.229, -0.877], &[1.967, 0.327, -1.123, -1.707, -0.532, -0.543, 0.285], &[0.964, -0.647, 3.541, 0.477, -0.209], &[1.387, 1.102, 0.123, 0.83, 4.091, 0.827]], 1.5516501008522026, 3.0, 22.0, 0.22938111100710453),
    (&[&[1.833, -0.721, -0.663, 0.178], &[0.618, 0.952, -0.077, 1.398, -0.83, -0.244, 0.763], &[2.613, 5.802], &[-1.376, -0.416, 4.881, 0.705, 2.763, 1.492, -0.421]], 3.4067434757391161, 3.0, 16.0, 0.043327693944165743),
    (&[&[0.678, 0.134], &[0.211, 0.883, 0.764], &[0.595, -0.019, 1.379, -1.404], &[2.219, 0.024, 3.954, 1.507, 2.548, 3.14, -0.305], &[7.004, 2.421, 1.391, 5.734, 0.287, 5.672, 0.896]], 2.514907509471083, 4.0, 18.0, 0.077750695234434065),
    (&[&[1.011, -0.229], &[0.887, -0.66, 1.356, 0.681], &[3.017, 3.784, -0.257]], 1.3848693284126869, 2.0, 6.0, 0.32025343537308166),
    (&[&[-0.519, -1.086, -0.208, 1.868, 0.53, -2.087], &[0.428, -0.426, -0.341, 1.212], &[0.716, -0.515, -1.0, 3.944, -0.066, 1.06], &[-1.285, -0.106, 0.353, -1.018, 3.975]], 0.35083395923425561, 3.0, 17.0, 0.78906484268280755),
    (&[&[0.729, 0.175, -1.959, -0.071, 0.382, 0.713, 0.449], &[-0.141, 0.699, 0.121, 0.86, 0.349, -0.597], &[-1.322, -0.114, 2.917, 1.339, 1.259, 0.091]], 0.63325332479527614, 2.0, 16.0, 0.54365579219070438),
    (&[&[0.532, 0.463, -0.367, 0.882, -0.806, -0.418], &[1.884, 1.604, 2.113, 1.186], &[0.853, 1.462, 2.35, 3.092], &[2.539, 5.606], &[0.068, -0.621, 1.482, 0.225, 1.036, 0.488, -0.329]], 10.822071557800327, 4.0, 18.0, 0.00011960284170538469),
    (&[&[-1.56, 1.602, 0.936, 0.645, -0.431], &[-0.358, 0.783], &[-0.78, 3.907, -0.754, -1.115], &[4.953, 0.251, 0.751, 1.06], &[0.655, -1.032, 7.41, 2.614]], 0.7283757620771946, 4.0, 14.0, 0.58725939521128466),
    (&[&[0.187, 0.371], &[0.362, 1.009, 2.999, 1.874], &[1.463, 1.448, -1.578, 0.835]], 1.04285178485709, 2.0, 7.0, 0.40140998206592676),
    (&[&[1.153, -0.769, 0.486], &[0.372, 1.693, -1.275, -0.426, -0.38], &[3.231, -0.098, 2.048, 1.136], &[1.337, -0.503, 2.164]], 1.4028939391631301, 3.0, 11.0, 0.29387437820893505),
];
