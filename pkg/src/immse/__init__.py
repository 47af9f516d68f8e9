"""Multiuser I-MMSE toolkit for the two-user Gaussian multiple-access channel.

Mutual information, MMSE matrices, the interference covariance term psi and
MI gradients for discrete inputs, with finite-difference verifiers, BPSK
closed forms and low-snr expansions.
"""

from .closed_form import (guo_bpsk_info, guo_bpsk_mmse, info1_scaled, info2_cond, mmse1_scaled,
                          mmse2_cond, psi_bpsk_successive, total_bpsk)
from .expectation import Estimate
from .gradients import (GradientReport, IdentityReport, grad_cond_info_wrt_precoder,
                        grad_info_wrt_channel, grad_info_wrt_precoder,
                        grad_nc_info_wrt_other_precoder, verify_conditional_identity,
                        verify_snr_identity)
from .information import (InfoReport, cond_info_user1, cond_info_user2, info_report, joint_info,
                          nc_info_gaussian_interference, nc_info_user1, nc_info_user2)
from .lowsnr import info_expansion, mmse_expansion, psi_expansion, wideband_slope
from .mmse import MmseReport, covariance_psi, cross_covariance, mmse_matrices, mmse_total
from .model import (Constellation, GaussHermite, MacModel, McConfig, UserLink, bpsk,
                    bpsk_scalar_mac, effective_matrix, qpsk, sample_outputs, unit_scalar_mac)
from .posterior import likelihood, output_density, posterior_mean_sic_user2, posterior_means

__version__ = "0.1.0"
