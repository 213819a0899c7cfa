from django.urls import path

from .views import health, overview, runs, signatures

app_name = 'web'

urlpatterns = [
    path('', overview, name='overview'),
    path('health/', health, name='health'),
    path('runs/', runs, name='runs'),
    path('signatures/', signatures, name='signatures'),
]
