#pragma once

#include "wpcn/errors.hpp"

namespace wpcn {

// Scene and protocol parameters shared across every module.
//
// Densities are per square meter, powers in watts, and one frame holds
// t_slots unit slots of which a chosen n_dl are downlink energy slots.
struct NetworkParams {
  double lambda_ap = 8e-4;  // access point density
  double lambda_w = 1.2e-3; // wireless node density
  double p_d = 10.0;        // downlink transmit power per AP
  double eta = 0.4;         // rectifier conversion efficiency
  double alpha = 4.0;       // path-loss exponent
  double sigma2 = 1e-9;     // noise power at the receiving AP
  double beta = 5.0;        // uplink SINR decoding threshold
  double epsilon = 0.05;    // target outage probability
  int t_slots = 100;        // slots per frame
  double p_max = 0.02;      // uplink transmit power budget

  void validate() const {
    if (!(lambda_ap > 0.0)) throw domain_error("params: lambda_ap must be positive");
    if (!(lambda_w > 0.0)) throw domain_error("params: lambda_w must be positive");
    if (!(p_d > 0.0)) throw domain_error("params: p_d must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw domain_error("params: eta must lie in (0, 1]");
    if (!(alpha > 2.0)) throw domain_error("params: alpha must exceed 2");
    if (!(sigma2 > 0.0)) throw domain_error("params: sigma2 must be positive");
    if (!(beta > 0.0)) throw domain_error("params: beta must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("params: epsilon must lie in (0, 1)");
    if (t_slots < 2) throw domain_error("params: t_slots must be at least 2");
    if (!(p_max > 0.0)) throw domain_error("params: p_max must be positive");
  }
};

}  // namespace wpcn
