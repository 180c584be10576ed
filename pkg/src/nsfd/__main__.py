from nsfd.harness.cli import main

raise SystemExit(main())
