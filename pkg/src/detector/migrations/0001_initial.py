import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='DetectionRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('corpus_id', models.CharField(blank=True, max_length=128)),
                ('started_at', models.DateTimeField()),
                ('finished_at', models.DateTimeField()),
                ('set_count', models.PositiveIntegerField(default=0)),
                ('config', models.JSONField(default=dict)),
                ('recorded_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-finished_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='SuspectPattern',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('rank', models.PositiveIntegerField()),
                ('pattern', models.BinaryField()),
                ('pattern_hash', models.PositiveBigIntegerField()),
                ('coincidences', models.PositiveIntegerField()),
                ('packets', models.PositiveIntegerField()),
                ('f_q', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='suspects', to='detector.detectionrun')),
            ],
            options={
                'ordering': ['run', 'rank'],
                'constraints': [models.UniqueConstraint(fields=('run', 'rank'), name='unique_suspect_rank')],
            },
        ),
        migrations.CreateModel(
            name='SignatureRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('digest', models.CharField(help_text='SHA-256 of the pattern bytes.', max_length=64, unique=True)),
                ('pattern', models.BinaryField()),
                ('length', models.PositiveIntegerField()),
                ('pattern_hash', models.PositiveBigIntegerField()),
                ('created_at', models.DateTimeField()),
                ('first_run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.SET_NULL, related_name='signatures', to='detector.detectionrun')),
            ],
            options={
                'ordering': ['-created_at', 'digest'],
            },
        ),
    ]
