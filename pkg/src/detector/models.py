from django.db import models


class DetectionRun(models.Model):
    corpus_id = models.CharField(max_length=128, blank=True)
    started_at = models.DateTimeField()
    finished_at = models.DateTimeField()
    set_count = models.PositiveIntegerField(default=0)
    config = models.JSONField(default=dict)
    recorded_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-finished_at', '-id']

    def __str__(self) -> str:
        return f'{self.corpus_id or "corpus"} @ {self.finished_at:%Y-%m-%d %H:%M:%S}'

    @property
    def elapsed(self) -> float:
        return (self.finished_at - self.started_at).total_seconds()


class SuspectPattern(models.Model):
    run = models.ForeignKey(DetectionRun, on_delete=models.CASCADE, related_name='suspects')
    rank = models.PositiveIntegerField()
    pattern = models.BinaryField()
    pattern_hash = models.PositiveBigIntegerField()
    coincidences = models.PositiveIntegerField()
    packets = models.PositiveIntegerField()
    f_q = models.FloatField()

    class Meta:
        ordering = ['run', 'rank']
        constraints = [
            models.UniqueConstraint(fields=['run', 'rank'], name='unique_suspect_rank'),
        ]

    def __str__(self) -> str:
        return f'{self.hex[:32]} f_Q={self.f_q:.4f}'

    @property
    def hex(self) -> str:
        return bytes(self.pattern).hex()


class SignatureRecord(models.Model):
    digest = models.CharField(max_length=64, unique=True, help_text='SHA-256 of the pattern bytes.')
    pattern = models.BinaryField()
    length = models.PositiveIntegerField()
    pattern_hash = models.PositiveBigIntegerField()
    created_at = models.DateTimeField()
    first_run = models.ForeignKey(
        DetectionRun,
        on_delete=models.SET_NULL,
        null=True,
        blank=True,
        related_name='signatures',
    )

    class Meta:
        ordering = ['-created_at', 'digest']

    def __str__(self) -> str:
        return f'signature {self.pattern_hash} ({self.length} bytes)'

    @property
    def hex(self) -> str:
        return bytes(self.pattern).hex()
