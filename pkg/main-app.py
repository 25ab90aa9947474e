from diffeoreg.cli.main import main

raise SystemExit(main())
