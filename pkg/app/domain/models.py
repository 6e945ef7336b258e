from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import (
    DESK_EVAL_SEEDS,
    DESK_STEPS,
    DESK_TRAIN_SEEDS,
    FULL_EVAL_SEEDS,
    FULL_PROTOCOL,
    FULL_TRAIN_SEEDS,
)
from app.domain.types import Mitigation, WiringMode

EnvId = Literal["pendulum", "quadrotor", "seeker"]
AlgoId = Literal["td3", "a2c"]

# combinaciones (wiring, mitigación) con sentido
ALLOWED_MITIGATIONS: Dict[WiringMode, tuple] = {
    WiringMode.UNSAFE: (Mitigation.NONE,),
    WiringMode.SAFE_ENV: (Mitigation.NONE, Mitigation.PENALTY),
    WiringMode.SAFE_POLICY: (Mitigation.NONE, Mitigation.PSL, Mitigation.PENC),
}


class Td3Params(BaseModel):
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    exploration_noise: float = 0.1
    batch_size: int = 256
    replay_capacity: int = 100_000
    warmup_steps: int = 1000
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    hidden: List[int] = Field(default_factory=lambda: [64, 64])


class A2cParams(BaseModel):
    gamma: float = 0.99
    lam: float = 0.95
    n_steps: int = 16
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    init_log_std: float = -0.6931471805599453  # log(0.5)
    hidden: List[int] = Field(default_factory=lambda: [64, 64])


class ExperimentConfig(BaseModel):
    env: EnvId
    algorithm: AlgoId
    wiring: WiringMode = WiringMode.SAFE_ENV
    mitigation: Mitigation = Mitigation.NONE
    w: float = 1.0
    # sin valor: DESK_STEPS[env] y una décima parte para eval_interval
    total_steps: int
    eval_interval: int
    train_seeds: List[int] = Field(default_factory=lambda: list(FULL_TRAIN_SEEDS if FULL_PROTOCOL else DESK_TRAIN_SEEDS))
    eval_seeds: List[int] = Field(default_factory=lambda: list(FULL_EVAL_SEEDS if FULL_PROTOCOL else DESK_EVAL_SEEDS))
    output_dir: Optional[str] = None
    td3: Td3Params = Field(default_factory=Td3Params)
    a2c: A2cParams = Field(default_factory=A2cParams)

    model_config = {"extra": "forbid"}

    @model_validator(mode="before")
    @classmethod
    def _default_steps(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            if data.get("total_steps") is None:
                data["total_steps"] = DESK_STEPS.get(data.get("env"), 50_000)
            if data.get("eval_interval") is None:
                data["eval_interval"] = max(1, int(data["total_steps"]) // 10)
        return data

    @field_validator("w")
    @classmethod
    def _w_non_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("w debe ser >= 0")
        return v

    @field_validator("total_steps", "eval_interval")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("debe ser > 0")
        return v

    @field_validator("train_seeds", "eval_seeds")
    @classmethod
    def _distinct_seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("lista de semillas vacía")
        if len(set(v)) != len(v):
            raise ValueError("semillas duplicadas")
        return v

    @model_validator(mode="after")
    def _enough_samples(self) -> "ExperimentConfig":
        # el IQM con IC necesita al menos 4 retornos finales
        if len(self.train_seeds) * len(self.eval_seeds) < 4:
            raise ValueError("train_seeds x eval_seeds debe dar al menos 4 episodios de evaluación")
        return self

    @model_validator(mode="after")
    def _wiring_mitigation(self) -> "ExperimentConfig":
        allowed = ALLOWED_MITIGATIONS[self.wiring]
        # en A2C-SP "penalty" es alias de penc
        if self.effective_mitigation not in allowed:
            raise ValueError(
                f"mitigación '{self.mitigation.value}' no válida para wiring '{self.wiring.value}'"
            )
        return self

    @property
    def effective_mitigation(self) -> Mitigation:
        if self.algorithm == "a2c" and self.wiring == WiringMode.SAFE_POLICY and self.mitigation == Mitigation.PENALTY:
            return Mitigation.PENC
        return self.mitigation

    def label(self) -> str:
        return f"{self.env}-{self.algorithm}-{self.wiring.value}-{self.mitigation.value}-w{self.w:g}"


class SeedResult(BaseModel):
    train_seed: int
    returns: List[float]
    interventions: List[int]
    violations: int = 0
    infeasible_episodes: int = 0


class RunSummary(BaseModel):
    run_id: str
    label: str
    env: str
    algorithm: str
    wiring: str
    mitigation: str
    w: float
    seeds: List[SeedResult]
    iqm: float
    ci_low: float
    ci_high: float
    interventions_mean: float
    violations: int
    manifest: Dict[str, str]

    @model_validator(mode="after")
    def _ci_brackets(self) -> "RunSummary":
        if not (self.ci_low <= self.iqm <= self.ci_high):
            raise ValueError("el intervalo de confianza no contiene al IQM")
        return self


class RunStatus(BaseModel):
    id: str
    label: str
    status: str                 # queued | running | completed | failed
    progress: int               # 0..100
    current_step: str
    steps: list
    metrics: dict = {}
    artifacts: dict = {}
    updated_at: str
    error: Optional[str] = None


class ProjectRequest(BaseModel):
    """Petición de depuración: proyectar u sobre un zonotopo de acciones."""

    center: List[float]
    generators: List[List[float]]   # una fila por generador
    u: List[float]


class ProjectResponse(BaseModel):
    u_phi: List[float]
    status: str
    active_set: List[int]
    kkt_residual: float
    jacobian: Optional[List[List[float]]] = None
