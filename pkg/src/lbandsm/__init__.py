"""L-band passive microwave soil-moisture retrieval toolkit.

Brightness-temperature calibration and screening, the tau-omega forward
emission model with its dielectric/roughness submodels, single- and
dual-channel inversion under six operational presets, optical-index
canopy opacity estimation, and validation statistics against point
reference probes.
"""

from .errors import ConfigError, DataError, DomainError
from .geometry import FootprintEllipse, footprint
from .radiative import (ComplexPermittivity, DielectricModel, SoilState,
                        SurfaceRoughness, TbPair, VegetationState,
                        effective_temperature, forward_tb,
                        fresnel_reflectivity, mironov_permittivity,
                        rough_emissivity, simulate_tb, topp_moisture,
                        topp_permittivity, vegetation_transmissivity)
from .preprocess import (CalibrationParams, FilterThresholds,
                         ObservationRecord, QualityFlag, RawSample,
                         SessionSummary, Statistic, calibrate_voltage,
                         filter_tb, load_session, min_threshold,
                         representative, session_stats)
from .ancillary import (LandCoverTau, NdviSeries, ReflectanceSample,
                        TauCoefficients, daily_ndvi_series,
                        interpolate_daily, load_tau_coefficients, ndvi,
                        ndvi_to_tau)
from .retrieval import (AlgorithmConfig, AlgorithmKind, PresetSpec,
                        RetrievalResult, SurfaceConfig, TauSource,
                        TempSource, cost_dca, cost_rdca, cost_sca,
                        golden_section, load_preset, make_surface, retrieve)
from .validation import (MetricsReport, ReferenceRecord, align_pairs,
                         metrics, spatial_average)

__version__ = "0.1.0"
