// Generates the synthetic multispectral cube used by the demos and writes it
// as a tensor file. Four piecewise rank-1 quadrants give the segmentation
// stage real region structure to find.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "sctr/io.hpp"
#include "sctr/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"write the synthetic multispectral cube as a tensor file"};
    std::string out = "msi.t";
    int size = 96;
    int bands = 8;
    app.add_option("out", out, "Output tensor file");
    app.add_option("--size", size, "Spatial extent (size x size)")
        ->check(CLI::Range(2, 2048));
    app.add_option("--bands", bands, "Spectral band count")->check(CLI::Range(1, 256));
    CLI11_PARSE(app, argc, argv);

    const sctr::DenseTensor3<double> cube = sctr::make_quadrant_tensor(size, bands);
    double peak = 0.0;
    for (double v : cube.data) peak = std::max(peak, std::abs(v));
    sctr::save_tensor(out, cube, peak);
    std::printf("%s: %dx%dx%d, peak %.4g\n", out.c_str(), size, size, bands, peak);
    return 0;
}
