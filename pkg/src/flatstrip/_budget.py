import time


class Budget:
    """Cooperative wall-time / step budget.

    ``None`` limits are unlimited. Long loops call :meth:`tick` and stop
    (returning partial results) once :attr:`exhausted` turns true.
    """

    def __init__(self, seconds=None, steps=None):
        self.seconds = seconds
        self.steps = steps
        self.start = time.monotonic()
        self.used_steps = 0

    def tick(self, n=1):
        self.used_steps += n
        return not self.exhausted

    @property
    def elapsed(self):
        return time.monotonic() - self.start

    @property
    def exhausted(self):
        if self.seconds is not None and self.elapsed > self.seconds:
            return True
        if self.steps is not None and self.used_steps >= self.steps:
            return True
        return False

    def summary(self):
        return {"seconds": self.seconds, "steps": self.steps,
                "elapsed": round(self.elapsed, 3), "used_steps": self.used_steps}


def as_budget(budget):
    if budget is None:
        return Budget()
    if isinstance(budget, Budget):
        return budget
    return Budget(seconds=float(budget))
