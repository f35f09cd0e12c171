#ifndef CSIDECOMP_CSIDECOMP_HPP
#define CSIDECOMP_CSIDECOMP_HPP

#include "csidecomp/autoencoder.hpp"
#include "csidecomp/channel_sim.hpp"
#include "csidecomp/csi.hpp"
#include "csidecomp/csi_io.hpp"
#include "csidecomp/dhsic.hpp"
#include "csidecomp/dist_fit.hpp"
#include "csidecomp/error.hpp"
#include "csidecomp/fingerprint.hpp"
#include "csidecomp/kpca.hpp"
#include "csidecomp/metrics.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/pca.hpp"
#include "csidecomp/pipeline.hpp"
#include "csidecomp/rng.hpp"
#include "csidecomp/skg.hpp"
#include "csidecomp/sweep.hpp"

#endif
