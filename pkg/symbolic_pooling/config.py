"""
Configuration models and environment settings.

Values can come from flags, Dagster run config, or a .env file read through
python-dotenv (SYMPOOL_THREADS, SYMPOOL_LOG_LEVEL).
"""

import math
import os
from typing import Literal, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

load_dotenv()

DistanceMode = Literal["exact", "sampled"]

DEFAULT_T_SAMPLES = 64
DEFAULT_MARGIN = 0.3
DEFAULT_CMC_RANKS: Tuple[int, ...] = (1, 5, 10, 20)


class PoolingConfig(BaseModel):
    """How tracklets are turned into symbolic representations"""

    model_config = ConfigDict(frozen=True)

    # "sqrt" means ceil(sqrt(N)) bins per feature, an int is a fixed bin count
    bins: Union[Literal["sqrt"], PositiveInt] = "sqrt"
    t_samples: PositiveInt = DEFAULT_T_SAMPLES

    def bin_count(self, frames: int) -> int:
        if self.bins == "sqrt":
            return max(1, math.ceil(math.sqrt(frames)))
        return int(self.bins)

    @classmethod
    def from_policy(cls, policy: str, t_samples: int = DEFAULT_T_SAMPLES) -> "PoolingConfig":
        """Build from a command-line policy string: 'sqrt' or a positive integer"""
        policy = policy.strip().lower()
        if policy == "sqrt":
            return cls(bins="sqrt", t_samples=t_samples)
        return cls(bins=int(policy), t_samples=t_samples)

    def describe(self) -> str:
        return "sqrt(N)" if self.bins == "sqrt" else f"fixed({self.bins})"


class EvalProtocol(BaseModel):
    """Evaluation protocol switches for retrieval reports"""

    model_config = ConfigDict(frozen=True)

    compute_map: bool = True
    exclude_same_camera: bool = False
    cmc_ranks: Tuple[PositiveInt, ...] = DEFAULT_CMC_RANKS
    mode: DistanceMode = "sampled"
    workers: PositiveInt = Field(default_factory=lambda: default_threads())

    @field_validator("cmc_ranks")
    @classmethod
    def _sorted_unique(cls, ranks: Tuple[int, ...]) -> Tuple[int, ...]:
        if not ranks:
            raise ValueError("at least one CMC rank is required")
        return tuple(sorted(set(ranks)))

    @classmethod
    def single_shot(cls, **kwargs) -> "EvalProtocol":
        """One gallery instance per probe: CMC only"""
        return cls(compute_map=False, **kwargs)

    @classmethod
    def multi_shot(cls, **kwargs) -> "EvalProtocol":
        """Several gallery instances per identity: CMC and mAP"""
        return cls(compute_map=True, **kwargs)


def default_threads() -> int:
    """Default worker count for distance kernels (SYMPOOL_THREADS, default 1)"""
    try:
        return max(1, int(os.getenv("SYMPOOL_THREADS", "1")))
    except ValueError:
        return 1


def default_log_level() -> str:
    return os.getenv("SYMPOOL_LOG_LEVEL", "INFO").upper()
