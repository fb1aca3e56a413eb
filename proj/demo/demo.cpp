// Estimate u(T, x) at one state, then compare linear and bridge terminal
// interpolation at matched seeds.
#include <cstdio>

#include "relarb/relarb.hpp"

int main()
{
    using namespace relarb;
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    cfg.nPaths = 2000;
    cfg.seed = 7;
    cfg.threads = resolve_threads(0);

    const UEstimate lin = estimate_u(vsm, 0.0, vsm.x0, cfg);
    cfg.interpolation = Interpolation::BesselBridge;
    const UEstimate br = estimate_u(vsm, 0.0, vsm.x0, cfg);
    std::printf("u(1, (1,1)) linear: %.4f +- %.4f\n", lin.mean, lin.stdError);
    std::printf("u(1, (1,1)) bridge: %.4f +- %.4f\n", br.mean, br.stdError);

    cfg.interpolation = Interpolation::Linear;
    const UEstimate gen =
        estimate_u_general(VsmParams::from_zeta(0.0, {1.0, 1.0}), 0.0, vsm.x0, cfg);
    std::printf("zeta = 0:           %.4f +- %.4f\n", gen.mean, gen.stdError);
    return 0;
}
