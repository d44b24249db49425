from enum import Enum

from pydantic import BaseModel, Field

GENERATOR_VERSION = "philox4x64-blake2b/1"


class StreamLabel(str, Enum):
    initial_spin = "initial_spin"
    clock = "clock"
    tie_break = "tie_break"
    resample_spin = "resample_spin"
    resample_clock = "resample_clock"


class StreamKey(BaseModel):
    """One independent stream: a label plus the resample generation it belongs to."""
    label: StreamLabel
    generation: int = Field(default=0, ge=0)
    model_config = {
        'frozen': True
    }


class SeedManifest(BaseModel):
    """Full deterministic description of the randomness of one replica.

    ``spin_resamples`` / ``clock_resamples`` redirect a vertex's initial spin or clock to the
    ResampleSpin(k) / ResampleClock(k) stream; ``clock_suppression`` drops every ring of a vertex
    at or before the given time (conditioned replay).
    """
    master_seed: int = Field(ge=0, lt=2 ** 64)
    generator_version: str = GENERATOR_VERSION
    spin_resamples: dict[str, int] = Field(default_factory=dict)
    clock_resamples: dict[str, int] = Field(default_factory=dict)
    clock_suppression: dict[str, float] = Field(default_factory=dict)
    model_config = {
        'frozen': True
    }

    def spin_stream(self, address: str) -> StreamKey:
        generation = self.spin_resamples.get(address, 0)
        if generation:
            return StreamKey(label=StreamLabel.resample_spin, generation=generation)
        return StreamKey(label=StreamLabel.initial_spin)

    def clock_stream(self, address: str) -> StreamKey:
        generation = self.clock_resamples.get(address, 0)
        if generation:
            return StreamKey(label=StreamLabel.resample_clock, generation=generation)
        return StreamKey(label=StreamLabel.clock)

    def with_resampled_spin(self, address: str, generation: int = 1) -> "SeedManifest":
        return self.model_copy(update={"spin_resamples": {**self.spin_resamples, address: generation}})

    def with_resampled_clock(self, address: str, generation: int = 1) -> "SeedManifest":
        return self.model_copy(update={"clock_resamples": {**self.clock_resamples, address: generation}})

    def with_suppressed_clock(self, address: str, until: float) -> "SeedManifest":
        return self.model_copy(update={"clock_suppression": {**self.clock_suppression, address: until}})

    def replica(self, index: int) -> "SeedManifest":
        """Manifest of replica ``index``: master seed offset, no perturbations."""
        return SeedManifest(master_seed=(self.master_seed + index) % 2 ** 64,
                            generator_version=self.generator_version)
